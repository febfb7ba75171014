#pragma once

#include <map>
#include <string>

#include "atcor/common/civil_time.hpp"

namespace atcor::evaluate {

// Experiment windows for one city. Spans are half-open and aligned to the
// interval length.
struct Protocol {
  std::string city;
  int interval_hours = 1;
  int lookback = 24;
  TimeSpan train;   // existing-station training span
  TimeSpan test;    // existing-station test span (targets)
  TimeSpan deploy;  // new stations are those first used inside this window
  int history_days = 30;
  int new_window_hours = 672;   // evaluated from a new station's first usage
  double activity_floor = 10.0; // mean daily pick-ups + drop-offs over that window
  // Nonzero intervals in a row that mark a new station's first usage.
  int first_usage_run = 1;
  int virtual_intervals = 24;
  int ablation_intervals = 24;

  std::size_t train_intervals() const;
  std::size_t test_intervals() const;
  std::size_t new_window_intervals() const;

  // Throws ConfigError on unaligned or inverted spans and non-positive knobs.
  void validate() const;

  // Self-describing record stamped into every report.
  std::map<std::string, std::string> metadata() const;
};

// The published windows: "nyc" and "chicago" train 2019-04-11..07-19 and test
// 07-20..08-18 hourly; "la" trains on June 2019 and tests the next 30 days in
// 4 h bins. New stations: May-Aug 2019 (4 weeks each) and Jun-Dec 2019
// for LA (2 weeks each, first usage = 2 consecutive nonzero bins).
Protocol default_protocol(const std::string& city);

}  // namespace atcor::evaluate
