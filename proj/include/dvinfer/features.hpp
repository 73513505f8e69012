#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dvinfer/model_config.hpp"

namespace dvinfer {

inline constexpr std::size_t kPhonemeClasses = 40;  // 39 ARPABET + silence
inline constexpr std::size_t kStressLevels = 5;
inline constexpr std::size_t kContextSlots = 5;     // two previous, current, two next
inline constexpr std::size_t kSlotWidth = kPhonemeClasses + kStressLevels;
static_assert(2 + kContextSlots * kSlotWidth == kLinguisticFeatureDim);

inline constexpr std::array<std::string_view, kPhonemeClasses> kPhonemeNames = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY", "F",
    "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",
    "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH", "SIL"};
inline constexpr int kSilencePhoneme = 39;

/// Accepts ARPABET symbols case-insensitively; "pau", "sp" and "sil" name silence.
inline std::optional<int> phoneme_index(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "PAU" || upper == "SP") return kSilencePhoneme;
  for (std::size_t i = 0; i < kPhonemeNames.size(); ++i)
    if (kPhonemeNames[i] == upper) return static_cast<int>(i);
  return std::nullopt;
}

struct PhonemeToken {
  int identity = kSilencePhoneme;  // index into kPhonemeNames
  int stress = 0;                  // 0 = none, 1..4 = primary..quaternary
  double duration = 0.0;           // seconds
  bool voiced = false;
  double f0 = 0.0;                 // Hz, ignored when unvoiced
};

/// One 227-dim frame: [voiced, normalized log-F0, slot(-2), slot(-1),
/// slot(0), slot(+1), slot(+2)], each slot a 40-way identity one-hot
/// followed by a 5-way stress one-hot.
using LinguisticFrame = std::array<float, kLinguisticFeatureDim>;

struct F0Range {
  double floor_hz = 75.0;
  double ceil_hz = 500.0;
};

struct FeaturizeResult {
  std::vector<LinguisticFrame> frames;
  std::vector<std::string> warnings;
};

/// Affine map of ln f0 from [ln floor, ln ceil] onto [-1, 1]; f0 is
/// clamped into the range first.
inline double normalized_log_f0(double f0, const F0Range& range) {
  const double f = std::clamp(f0, range.floor_hz, range.ceil_hz);
  return 2.0 * (std::log(f) - std::log(range.floor_hz)) / (std::log(range.ceil_hz) - std::log(range.floor_hz)) - 1.0;
}

/// Frames a phoneme occupies at `rate` Hz: duration * rate rounded half-to-even.
inline std::size_t phoneme_frame_count(double duration, double rate) {
  return static_cast<std::size_t>(std::max(0.0, std::nearbyint(duration * rate)));
}

/// Samples the phoneme sequence at `frame_rate` Hz, repeating each phoneme
/// (with its context and F0) once per frame it spans. Phonemes too short
/// to earn a frame are dropped with a warning; context slots past either
/// end of the sequence hold silence.
inline FeaturizeResult featurize(std::span<const PhonemeToken> phonemes, const F0Range& range = {},
                                 double frame_rate = 256.0) {
  if (phonemes.empty()) throw std::invalid_argument("featurize: empty phoneme sequence");
  if (!(range.floor_hz > 0.0 && range.floor_hz < range.ceil_hz))
    throw std::invalid_argument("featurize: need 0 < f0 floor < f0 ceiling");

  FeaturizeResult result;
  std::vector<PhonemeToken> kept;
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < phonemes.size(); ++i) {
    const PhonemeToken& p = phonemes[i];
    if (p.identity < 0 || p.identity >= static_cast<int>(kPhonemeClasses))
      throw std::invalid_argument("featurize: phoneme identity out of range at index " + std::to_string(i));
    if (p.stress < 0 || p.stress >= static_cast<int>(kStressLevels))
      throw std::invalid_argument("featurize: stress out of range at index " + std::to_string(i));
    if (!(p.duration > 0.0)) throw std::invalid_argument("featurize: non-positive duration at index " + std::to_string(i));
    if (p.voiced && !(p.f0 > 0.0)) throw std::invalid_argument("featurize: voiced phoneme without F0 at index " + std::to_string(i));
    const std::size_t n = phoneme_frame_count(p.duration, frame_rate);
    if (n == 0) {
      result.warnings.push_back("phoneme " + std::to_string(i) + " (" + std::string(kPhonemeNames[p.identity]) +
                                ", " + std::to_string(p.duration) + " s) is shorter than half a frame; dropped");
      continue;
    }
    kept.push_back(p);
    counts.push_back(n);
  }

  for (std::size_t i = 0; i < kept.size(); ++i) {
    LinguisticFrame frame{};
    frame[0] = kept[i].voiced ? 1.0f : 0.0f;
    frame[1] = kept[i].voiced ? static_cast<float>(normalized_log_f0(kept[i].f0, range)) : 0.0f;
    for (std::size_t slot = 0; slot < kContextSlots; ++slot) {
      const auto k = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(slot) - 2;
      const bool inside = k >= 0 && k < static_cast<std::ptrdiff_t>(kept.size());
      const int identity = inside ? kept[static_cast<std::size_t>(k)].identity : kSilencePhoneme;
      const int stress = inside ? kept[static_cast<std::size_t>(k)].stress : 0;
      const std::size_t base = 2 + slot * kSlotWidth;
      frame[base + static_cast<std::size_t>(identity)] = 1.0f;
      frame[base + kPhonemeClasses + static_cast<std::size_t>(stress)] = 1.0f;
    }
    result.frames.insert(result.frames.end(), counts[i], frame);
  }
  return result;
}

}  // namespace dvinfer
