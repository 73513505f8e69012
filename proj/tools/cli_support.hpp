#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dvinfer/features.hpp"
#include "dvinfer/mulaw.hpp"
#include "dvinfer/phoneme_loss.hpp"

namespace dvcli {

/// Bad input files and flag combinations; mapped to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

/// Strips comments (#...) and surrounding blanks; empty result means skip.
inline std::string clean(const std::string& line) {
  std::string s = line.substr(0, line.find('#'));
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// One phoneme per line: IDENT STRESS DURATION_MS VOICED F0_HZ, e.g.
/// "AH 1 120 1 182.5". Silence is spelled sil.
inline std::vector<dvinfer::PhonemeToken> parse_phonemes(const std::vector<std::string>& lines) {
  std::vector<dvinfer::PhonemeToken> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = clean(lines[i]);
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string name, extra;
    dvinfer::PhonemeToken tok;
    double duration_ms = 0.0, f0 = 0.0;
    int voiced = 0;
    const std::string where = "phoneme line " + std::to_string(i + 1) + ": ";
    if (!(in >> name >> tok.stress >> duration_ms >> voiced >> f0) || (in >> extra))
      throw InputError(where + "expected IDENT STRESS DURATION_MS VOICED F0_HZ");
    if (voiced != 0 && voiced != 1) throw InputError(where + "VOICED must be 0 or 1");
    const auto id = dvinfer::phoneme_index(name);
    if (!id) throw InputError(where + "unknown phoneme '" + name + "'");
    tok.identity = *id;
    tok.duration = duration_ms / 1000.0;
    tok.voiced = voiced == 1;
    tok.f0 = tok.voiced ? f0 : 0.0;
    out.push_back(tok);
  }
  if (out.empty()) throw InputError("phoneme file has no phonemes");
  return out;
}

struct LossRow {
  double duration = 0.0;
  double voiced = 0.0;
  std::vector<double> f0;
};

/// One phoneme per line: DURATION VOICED F0_1 F0_2 ...
inline std::vector<LossRow> parse_loss_rows(const std::vector<std::string>& lines) {
  std::vector<LossRow> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = clean(lines[i]);
    if (line.empty()) continue;
    std::istringstream in(line);
    LossRow row;
    if (!(in >> row.duration >> row.voiced))
      throw InputError("loss line " + std::to_string(i + 1) + ": expected DURATION VOICED F0...");
    for (double v; in >> v;) row.f0.push_back(v);
    if (!in.eof()) throw InputError("loss line " + std::to_string(i + 1) + ": malformed F0 value");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<dvinfer::PhonemePrediction> as_predictions(const std::vector<LossRow>& rows) {
  std::vector<dvinfer::PhonemePrediction> out;
  for (const auto& r : rows) out.push_back({r.duration, r.voiced, r.f0});
  return out;
}

inline std::vector<dvinfer::PhonemeTarget> as_targets(const std::vector<LossRow>& rows) {
  std::vector<dvinfer::PhonemeTarget> out;
  for (const auto& r : rows) out.push_back({r.duration, r.voiced, r.f0});
  return out;
}

/// 16-bit mono PCM, little-endian, from mu-law codes.
inline std::vector<char> wav_bytes(const std::vector<int>& codes, int levels, std::uint32_t rate) {
  std::vector<char> out;
  auto put = [&](std::uint32_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  const auto data_bytes = static_cast<std::uint32_t>(codes.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put(36 + data_bytes, 4);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put(16, 4);
  put(1, 2);  // PCM
  put(1, 2);  // mono
  put(rate, 4);
  put(rate * 2, 4);
  put(2, 2);
  put(16, 2);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put(data_bytes, 4);
  for (int c : codes) {
    const double x = dvinfer::mulaw_decode(c, levels);
    const auto s = static_cast<std::int16_t>(std::lround(std::clamp(x, -1.0, 1.0) * 32767.0));
    put(static_cast<std::uint16_t>(s), 2);
  }
  return out;
}

inline void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write to " + path + " failed");
}

inline std::string machine_descriptor() {
  std::ifstream in("/proc/cpuinfo");
  std::string name = "unknown cpu";
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("model name", 0) == 0) {
      name = clean(line.substr(line.find(':') + 1));
      break;
    }
  }
  return name + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads";
}

}  // namespace dvcli
