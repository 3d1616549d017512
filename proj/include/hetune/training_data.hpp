#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hetune/error.hpp"
#include "hetune/side.hpp"

namespace hetune {

/// One timing measurement. `fraction` is the share of the workload run on
/// `side` (for a device row this is 100 - host fraction).
struct TrainingSample {
  Side side = Side::host;
  int threads = 1;
  std::string affinity;
  int fraction = 0;
  double input_size = 0.0;
  double time_s = 0.0;

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

inline constexpr std::string_view kTrainingCsvHeader =
    "side,threads,affinity,fraction,input_size,time_s";

inline void write_training_csv(std::ostream& out,
                               const std::vector<TrainingSample>& samples) {
  out << kTrainingCsvHeader << '\n';
  for (const auto& s : samples) {
    out << to_string(s.side) << ',' << s.threads << ',' << s.affinity << ','
        << s.fraction << ',' << format_double(s.input_size) << ','
        << format_double(s.time_s) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw Error(where + ": cannot parse number '" + text + "'");
  return value;
}

}  // namespace detail

/// Parses the training CSV; errors carry the 1-based line number.
inline std::vector<TrainingSample> read_training_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("training csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrainingCsvHeader)
    throw Error("training csv line 1: expected header '" +
                std::string(kTrainingCsvHeader) + "'");
  std::vector<TrainingSample> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "training csv line " + std::to_string(line_no);
    auto cells = detail::split_csv_line(line);
    if (cells.size() != 6)
      throw Error(where + ": expected 6 columns, got " +
                  std::to_string(cells.size()));
    TrainingSample s;
    try {
      s.side = side_from_string(cells[0]);
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    s.threads = detail::parse_number<int>(cells[1], where);
    s.affinity = cells[2];
    s.fraction = detail::parse_number<int>(cells[3], where);
    s.input_size = detail::parse_number<double>(cells[4], where);
    s.time_s = detail::parse_number<double>(cells[5], where);
    if (s.threads <= 0) throw Error(where + ": threads must be positive");
    if (s.fraction < 0 || s.fraction > 100)
      throw Error(where + ": fraction outside [0, 100]");
    if (!(s.input_size > 0.0)) throw Error(where + ": input_size must be positive");
    if (!(s.time_s > 0.0)) throw Error(where + ": time_s must be positive");
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace hetune
