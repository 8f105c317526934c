#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "terracast/events.hpp"

namespace terracast {

inline constexpr const char* kEventsHeader = "id,lat,lon,date,animal,victim,outcome,village";

enum class RejectReason { bad_coords, out_of_aoi, bad_date, duplicate, missing_field };

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::bad_coords: return "bad_coords";
    case RejectReason::out_of_aoi: return "out_of_aoi";
    case RejectReason::bad_date: return "bad_date";
    case RejectReason::duplicate: return "duplicate";
    default: return "missing_field";
  }
}

struct RawRecord {
  std::string id, lat, lon, date, animal, victim, outcome, village;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct Rejection {
  std::size_t row;  // 0-based data row (header excluded)
  RejectReason reason;
};

struct CleaningReport {
  std::size_t input_count = 0;
  std::size_t accepted_count = 0;
  std::vector<Rejection> rejected;

  std::size_t count(RejectReason r) const {
    return static_cast<std::size_t>(std::count_if(rejected.begin(), rejected.end(),
                                                  [r](const Rejection& x) { return x.reason == r; }));
  }
};

namespace csv {

// One RFC-4180 line: commas, double-quoted fields with "" escapes. No embedded newlines.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

inline std::string quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace csv

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

inline bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// YYYY-MM-DD with a real calendar day.
inline bool parse_date(const std::string& s, int& year, int& month, int& day) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  if (!parse_int(std::string_view(s).substr(0, 4), year) ||
      !parse_int(std::string_view(s).substr(5, 2), month) ||
      !parse_int(std::string_view(s).substr(8, 2), day))
    return false;
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int dim = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  return day <= dim;
}

}  // namespace detail

inline std::vector<RawRecord> read_raw_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("events csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  if (line != kEventsHeader)
    throw std::runtime_error("events csv: header must be '" + std::string(kEventsHeader) + "'");
  std::vector<RawRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = csv::split_line(line);
    RawRecord r;
    // Short rows keep empty trailing fields and fail validation as missing_field.
    std::string* slots[] = {&r.id, &r.lat, &r.lon, &r.date, &r.animal, &r.victim, &r.outcome, &r.village};
    for (std::size_t i = 0; i < 8 && i < f.size(); ++i) *slots[i] = csv::trim(f[i]);
    if (f.size() != 8) r.id.clear();
    rows.push_back(std::move(r));
  }
  return rows;
}

// Validates raw rows in input order. Exact duplicates keep their first copy.
inline std::pair<std::vector<ConflictEvent>, CleaningReport> clean_records(
    const std::vector<RawRecord>& rows, const GeoBox& aoi) {
  std::vector<ConflictEvent> out;
  CleaningReport rep;
  rep.input_count = rows.size();
  std::set<std::tuple<std::string, std::string, std::string, std::string, std::string, std::string,
                      std::string, std::string>>
      seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RawRecord& r = rows[i];
    auto reject = [&](RejectReason why) { rep.rejected.push_back({i, why}); };
    ConflictEvent e;
    if (!detail::parse_double(r.lat, e.location.lat) || !detail::parse_double(r.lon, e.location.lon) ||
        !e.location.valid()) {
      reject(RejectReason::bad_coords);
      continue;
    }
    // victim/outcome outside their closed vocabularies count as missing.
    if (r.id.empty() || r.date.empty() || (r.victim != "human" && r.victim != "cattle") ||
        (r.outcome != "killed" && r.outcome != "injured")) {
      reject(RejectReason::missing_field);
      continue;
    }
    int y = 0, m = 0, d = 0;
    if (!detail::parse_date(r.date, y, m, d)) {
      reject(RejectReason::bad_date);
      continue;
    }
    if (!aoi.contains(e.location)) {
      reject(RejectReason::out_of_aoi);
      continue;
    }
    if (!seen.emplace(r.id, r.lat, r.lon, r.date, r.animal, r.victim, r.outcome, r.village).second) {
      reject(RejectReason::duplicate);
      continue;
    }
    e.id = r.id;
    e.period = TimePeriod(m, y);
    e.day = d;
    e.animal = parse_animal(r.animal);
    e.victim = r.victim == "human" ? Victim::human : Victim::cattle;
    e.outcome = r.outcome == "killed" ? Outcome::killed : Outcome::injured;
    e.village = r.village;
    out.push_back(std::move(e));
  }
  rep.accepted_count = out.size();
  return {std::move(out), std::move(rep)};
}

inline std::pair<std::vector<ConflictEvent>, CleaningReport> load_events(std::istream& in,
                                                                         const GeoBox& aoi) {
  return clean_records(read_raw_records(in), aoi);
}

inline std::pair<std::vector<ConflictEvent>, CleaningReport> load_events(const std::string& path,
                                                                         const GeoBox& aoi) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open events file: " + path);
  return load_events(in, aoi);
}

inline std::string format_event_row(const ConflictEvent& e) {
  char buf[128];
  std::snprintf(buf, sizeof buf, ",%.8f,%.8f,%04d-%02d-%02d,", e.location.lat, e.location.lon,
                e.period.year, e.period.month, e.day);
  std::string row = csv::quote(e.id) + buf;
  row += std::string(to_string(e.animal)) + "," + std::string(to_string(e.victim)) + "," +
         std::string(to_string(e.outcome)) + "," + csv::quote(e.village);
  return row;
}

inline void write_events_csv(std::ostream& out, std::span<const ConflictEvent> events) {
  out << kEventsHeader << '\n';
  for (const auto& e : events) out << format_event_row(e) << '\n';
}

inline void write_events_csv(const std::string& path, std::span<const ConflictEvent> events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write events file: " + path);
  write_events_csv(out, events);
}

struct YearSplit {
  std::vector<ConflictEvent> train;
  std::vector<ConflictEvent> test;
  std::size_t dropped = 0;
};

inline YearSplit split_by_years(std::span<const ConflictEvent> events, const std::set<int>& train_years,
                                const std::set<int>& test_years) {
  for (int y : train_years)
    if (test_years.count(y)) throw std::invalid_argument("split_by_years: year sets overlap");
  YearSplit s;
  for (const auto& e : events) {
    if (train_years.count(e.period.year))
      s.train.push_back(e);
    else if (test_years.count(e.period.year))
      s.test.push_back(e);
    else
      ++s.dropped;
  }
  return s;
}

}  // namespace terracast
