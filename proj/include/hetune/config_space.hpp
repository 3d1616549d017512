#pragma once

// Discrete host/device configuration space: five independent parameter lists
// whose cross product is the search universe.

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <ranges>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetune/error.hpp"
#include "hetune/rng.hpp"

namespace hetune {

/// One point of the space. The device share of the workload is always
/// 100 - host_fraction and is not stored.
struct Configuration {
  int host_threads = 1;
  std::string host_affinity;
  int device_threads = 1;
  std::string device_affinity;
  int host_fraction = 0;

  int device_fraction() const { return 100 - host_fraction; }

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Configuration& c) {
  return os << "{host " << c.host_threads << "/" << c.host_affinity
            << ", device " << c.device_threads << "/" << c.device_affinity
            << ", host_fraction " << c.host_fraction << "}";
}

/// Number of fields in which two configurations differ (0..5).
inline int hamming_distance(const Configuration& a, const Configuration& b) {
  return int(a.host_threads != b.host_threads) +
         int(a.host_affinity != b.host_affinity) +
         int(a.device_threads != b.device_threads) +
         int(a.device_affinity != b.device_affinity) +
         int(a.host_fraction != b.host_fraction);
}

/// Field positions, in enumeration significance order.
enum class Field : int {
  host_threads = 0,
  host_affinity,
  device_threads,
  device_affinity,
  host_fraction,
};
inline constexpr int kFieldCount = 5;

/// Named discrete parameter lists. Immutable once constructed; the
/// constructor enforces non-empty, duplicate-free lists, positive thread
/// counts and fractions within [0, 100].
class ParameterSpace {
 public:
  ParameterSpace(std::vector<int> host_threads,
                 std::vector<std::string> host_affinities,
                 std::vector<int> device_threads,
                 std::vector<std::string> device_affinities,
                 std::vector<int> fractions)
      : host_threads_(std::move(host_threads)),
        host_affinities_(std::move(host_affinities)),
        device_threads_(std::move(device_threads)),
        device_affinities_(std::move(device_affinities)),
        fractions_(std::move(fractions)) {
    check_list("host_threads", host_threads_);
    check_list("host_affinities", host_affinities_);
    check_list("device_threads", device_threads_);
    check_list("device_affinities", device_affinities_);
    check_list("fractions", fractions_);
    for (int t : host_threads_)
      if (t <= 0) throw Error("host_threads: thread count must be positive");
    for (int t : device_threads_)
      if (t <= 0) throw Error("device_threads: thread count must be positive");
    for (int f : fractions_)
      if (f < 0 || f > 100)
        throw Error("fractions: value " + std::to_string(f) +
                    " outside [0, 100]");
  }

  const std::vector<int>& host_threads() const { return host_threads_; }
  const std::vector<std::string>& host_affinities() const { return host_affinities_; }
  const std::vector<int>& device_threads() const { return device_threads_; }
  const std::vector<std::string>& device_affinities() const { return device_affinities_; }
  const std::vector<int>& fractions() const { return fractions_; }

  /// List lengths in enumeration significance order.
  std::array<std::size_t, kFieldCount> radices() const {
    return {host_threads_.size(), host_affinities_.size(),
            device_threads_.size(), device_affinities_.size(),
            fractions_.size()};
  }

  /// Configuration at mixed-radix position `index` in [0, cardinality).
  /// The last field (host_fraction) varies fastest.
  Configuration at(std::uint64_t index) const {
    const auto r = radices();
    std::array<std::size_t, kFieldCount> digit{};
    for (int i = kFieldCount - 1; i >= 0; --i) {
      digit[i] = static_cast<std::size_t>(index % r[i]);
      index /= r[i];
    }
    return from_positions(digit);
  }

  Configuration from_positions(
      const std::array<std::size_t, kFieldCount>& pos) const {
    return Configuration{host_threads_[pos[0]], host_affinities_[pos[1]],
                         device_threads_[pos[2]], device_affinities_[pos[3]],
                         fractions_[pos[4]]};
  }

  /// List positions of each field of `c`; throws if `c` is not a member.
  std::array<std::size_t, kFieldCount> positions(const Configuration& c) const {
    return {find("host_threads", host_threads_, c.host_threads),
            find("host_affinities", host_affinities_, c.host_affinity),
            find("device_threads", device_threads_, c.device_threads),
            find("device_affinities", device_affinities_, c.device_affinity),
            find("fractions", fractions_, c.host_fraction)};
  }

  bool contains(const Configuration& c) const {
    auto has = [](const auto& list, const auto& v) {
      return std::find(list.begin(), list.end(), v) != list.end();
    };
    return has(host_threads_, c.host_threads) &&
           has(host_affinities_, c.host_affinity) &&
           has(device_threads_, c.device_threads) &&
           has(device_affinities_, c.device_affinity) &&
           has(fractions_, c.host_fraction);
  }

  /// Enumeration index of a member configuration.
  std::uint64_t index_of(const Configuration& c) const {
    const auto r = radices();
    const auto p = positions(c);
    std::uint64_t index = 0;
    for (int i = 0; i < kFieldCount; ++i) index = index * r[i] + p[i];
    return index;
  }

 private:
  template <typename T>
  static void check_list(const char* name, const std::vector<T>& list) {
    if (list.empty()) throw Error(std::string(name) + ": list is empty");
    std::set<T> seen(list.begin(), list.end());
    if (seen.size() != list.size())
      throw Error(std::string(name) + ": list contains duplicates");
  }

  template <typename T>
  static std::size_t find(const char* name, const std::vector<T>& list,
                          const T& value) {
    auto it = std::find(list.begin(), list.end(), value);
    if (it == list.end()) {
      if constexpr (std::is_same_v<T, std::string>)
        throw Error(std::string(name) + ": value '" + value +
                    "' is not in the space");
      else
        throw Error(std::string(name) + ": value " + std::to_string(value) +
                    " is not in the space");
    }
    return static_cast<std::size_t>(it - list.begin());
  }

  std::vector<int> host_threads_;
  std::vector<std::string> host_affinities_;
  std::vector<int> device_threads_;
  std::vector<std::string> device_affinities_;
  std::vector<int> fractions_;
};

/// Product of the five list lengths.
inline std::uint64_t cardinality(const ParameterSpace& space) {
  const auto r = space.radices();
  return std::accumulate(r.begin(), r.end(), std::uint64_t{1},
                         [](std::uint64_t a, std::size_t b) { return a * b; });
}

/// Every configuration exactly once, lexicographic by list position of
/// (host_threads, host_affinity, device_threads, device_affinity,
/// host_fraction). Lazy; the space must outlive the returned view.
inline auto enumerate(const ParameterSpace& space) {
  return std::views::iota(std::uint64_t{0}, cardinality(space)) |
         std::views::transform(
             [&space](std::uint64_t i) { return space.at(i); });
}

/// Each field drawn independently and uniformly from its list.
inline Configuration random_configuration(const ParameterSpace& space,
                                          Rng& rng) {
  std::array<std::size_t, kFieldCount> pos{};
  const auto r = space.radices();
  for (int i = 0; i < kFieldCount; ++i) pos[i] = uniform_index(rng, r[i]);
  return space.from_positions(pos);
}

/// Reassigns exactly one field: the field is uniform among those whose list
/// has more than one value, the new value uniform among that field's other
/// values. An all-singleton space returns `current` unchanged.
inline Configuration neighbor(const ParameterSpace& space,
                              const Configuration& current, Rng& rng) {
  const auto r = space.radices();
  std::vector<int> movable;
  for (int i = 0; i < kFieldCount; ++i)
    if (r[i] > 1) movable.push_back(i);
  if (movable.empty()) return current;

  auto pos = space.positions(current);
  const int field = movable[uniform_index(rng, movable.size())];
  std::size_t next = uniform_index(rng, r[field] - 1);
  if (next >= pos[field]) ++next;
  pos[field] = next;
  return space.from_positions(pos);
}

/// Canonical space for a dual-socket host and a many-core accelerator:
/// host threads {2,4,6,12,24,36,48}, device threads {2,...,240}, three
/// affinities per side, host fractions 0..100 (57267 configurations).
inline ParameterSpace default_space() {
  std::vector<int> fractions(101);
  std::iota(fractions.begin(), fractions.end(), 0);
  return ParameterSpace({2, 4, 6, 12, 24, 36, 48}, {"none", "scatter", "compact"},
                        {2, 4, 8, 16, 30, 60, 120, 180, 240},
                        {"balanced", "scatter", "compact"}, std::move(fractions));
}

inline ParameterSpace space_from_json(const nlohmann::json& doc) {
  auto field = [&doc](const char* key) -> const nlohmann::json& {
    if (!doc.is_object() || !doc.contains(key))
      throw Error(std::string("space: missing array '") + key + "'");
    const auto& v = doc.at(key);
    if (!v.is_array())
      throw Error(std::string("space: '") + key + "' must be an array");
    return v;
  };
  try {
    return ParameterSpace(field("host_threads").get<std::vector<int>>(),
                          field("host_affinities").get<std::vector<std::string>>(),
                          field("device_threads").get<std::vector<int>>(),
                          field("device_affinities").get<std::vector<std::string>>(),
                          field("fractions").get<std::vector<int>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("space: ") + e.what());
  }
}

inline nlohmann::json space_to_json(const ParameterSpace& space) {
  return {{"host_threads", space.host_threads()},
          {"host_affinities", space.host_affinities()},
          {"device_threads", space.device_threads()},
          {"device_affinities", space.device_affinities()},
          {"fractions", space.fractions()}};
}

inline ParameterSpace load_space(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("space: ") + e.what());
  }
  return space_from_json(doc);
}

}  // namespace hetune
