#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "selab/estimation.hpp"

namespace selab {

// One stop. x holds coded observable context (age band, gender, build,
// location, hour band), u the officer's stated stop reasons as 0/1 flags.
// The contraband outcome exists only for searched stops.
struct StopRecord {
  Features x;
  int r = 0;
  std::vector<int> u;
  int searched = 0;
  std::optional<int> contraband;
};

// Column-role mapping for stop-level CSV input. Values are matched after
// whitespace trimming, case-sensitively.
struct SchemaConfig {
  std::vector<std::string> x_cols;
  std::vector<std::string> u_cols;
  std::string race_col = "race";
  std::string searched_col = "searched";
  std::string contraband_col = "contrabn";
  std::vector<std::string> group0_values{"W"};
  std::vector<std::string> group1_values{"B"};
  std::vector<std::string> true_values{"Y", "1", "true", "T", "yes"};
  std::vector<std::string> false_values{"N", "0", "false", "F", "no"};
  // x columns listed here are parsed as numbers and coded by bin index
  // against the ascending cut points; others are dictionary-coded.
  std::map<std::string, std::vector<double>> numeric_bins;

  static SchemaConfig defaults();
};

struct IngestReport {
  std::size_t rows_total = 0;
  std::size_t rows_kept = 0;
  std::size_t dropped_missing = 0;       // required field empty
  std::size_t dropped_malformed = 0;     // unparseable numeric field
  std::size_t dropped_inconsistent = 0;  // contraband recorded without a search
  std::size_t filtered_group = 0;        // race outside the two kept groups
  // dictionary-coded x columns: code -> original label (binned columns get
  // interval labels)
  std::vector<std::vector<std::string>> x_level_names;

  std::string summary() const;
};

struct IngestResult {
  std::vector<StopRecord> records;
  IngestReport report;
};

IngestResult ingest(std::istream& in, const SchemaConfig& schema);
IngestResult ingest_file(const std::string& path, const SchemaConfig& schema);

// Seeded disjoint and exhaustive split of the searched subset; partition A
// gets floor(fraction * n_searched) records.
std::pair<std::vector<StopRecord>, std::vector<StopRecord>> split_searched(
    const std::vector<StopRecord>& records, double fraction, std::uint64_t seed);

// Logistic model of contraband on (x, r, u), fit on searched stops.
struct RiskModel {
  std::vector<std::vector<int>> x_levels;
  std::size_t n_u = 0;
  std::vector<double> beta;
  FitMeta meta;
  bool degenerate = false;      // constant-label training partition
  double constant_score = 0.0;  // score used when degenerate

  double score(const StopRecord& rec) const;
  nlohmann::json to_json() const;
};

// encoding_domain supplies the categorical dictionaries (defaults to the
// training records); pass the full dataset when the model must score
// records beyond its training partition.
RiskModel fit_risk_model(const std::vector<StopRecord>& labeled,
                         const std::vector<StopRecord>& encoding_domain = {},
                         const LogisticFitOptions& opts = {});

struct Thresholds {
  double c0 = 0.0;
  double c1 = 0.0;
  double tau = 0.0;  // c0 - c1
  std::array<std::size_t, 2> target{0, 0};
  std::array<std::size_t, 2> realized{0, 0};  // strictly-above counts
};

// Picks per-group score cutoffs so that, with the strict s = 1(score > c_r)
// rule, group r contributes its target share of overall_rate * N searches.
// Targets are floor-rounded; realized counts fall short of targets only on
// score ties at the cutoff.
Thresholds calibrate_thresholds(const std::array<std::vector<double>, 2>& scores_by_group,
                                double overall_rate, double aa_share);

struct SyntheticSearchSet {
  std::vector<StopRecord> records;  // searched := synthetic flag, labels re-masked
  Thresholds thresholds;
  double target_aa_share = 0.0;
  double realized_rate = 0.0;
  double realized_aa_share = 0.0;
};

SyntheticSearchSet synthesize(const std::vector<StopRecord>& part_b,
                              const Thresholds& thresholds, const RiskModel& risk);

struct PipelineConfig {
  double split_fraction = 0.5;
  double search_rate = 0.5;
  std::vector<double> share_grid;  // defaults to 0.80 .. 0.95 step 0.025
  double top_share_q = 0.5;
  int bootstrap_resamples = 100;
  FitSpec refit;  // logistic, group-aware

  void validate() const;
};

struct FigurePoint {
  double aa_share = 0.0;
  double tau = 0.0;
  Exercise exercise = Exercise::y_given_selected;
  int group = 0;
  double top_share = 0.0;
  double se = 0.0;  // bootstrap standard error (not serialized to csv)
};

struct FigureResult {
  std::vector<FigurePoint> points;
  std::vector<Thresholds> thresholds;  // one per grid share

  std::string to_csv() const;
  std::string to_svg() const;
};

// Full exercise: split the searched stops, fit the (x, r, u) risk model on
// partition A, then for every target share re-select partition B at
// calibrated thresholds, refit the three (x, r) exercises and measure each
// group's top-q share.
FigureResult replicate_figure(const std::vector<StopRecord>& records,
                              const PipelineConfig& cfg, std::uint64_t seed,
                              int threads = 1);

}  // namespace selab
