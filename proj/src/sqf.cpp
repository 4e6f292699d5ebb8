#include "selab/sqf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "selab/csv.hpp"
#include "selab/experiments.hpp"
#include "selab/rng.hpp"
#include "selab/svg.hpp"
#include "selab/util.hpp"

namespace selab {

SchemaConfig SchemaConfig::defaults() {
  SchemaConfig s;
  s.x_cols = {"age", "sex", "build", "pct", "timestop"};
  s.u_cols = {"cs_objcs", "cs_descr", "cs_casng", "cs_lkout", "cs_drgtr", "cs_furtv"};
  s.numeric_bins = {{"age", {25.0, 35.0, 45.0}}, {"timestop", {600.0, 1200.0, 1800.0}}};
  return s;
}

std::string IngestReport::summary() const {
  std::ostringstream out;
  out << "rows=" << rows_total << " kept=" << rows_kept << " dropped_missing="
      << dropped_missing << " dropped_malformed=" << dropped_malformed
      << " dropped_inconsistent=" << dropped_inconsistent
      << " filtered_group=" << filtered_group;
  return out.str();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool contains(const std::vector<std::string>& values, const std::string& v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

// -1 missing, 0/1 parsed; throws on an unrecognized token.
int parse_flag(const std::string& raw, const SchemaConfig& schema, const char* what) {
  const std::string v = trim(raw);
  if (v.empty()) return -1;
  if (contains(schema.true_values, v)) return 1;
  if (contains(schema.false_values, v)) return 0;
  throw ValidationError(std::string("ingest: non-binary ") + what + " value \"" + v + "\"");
}

int bin_index(double value, const std::vector<double>& cuts) {
  int idx = 0;
  for (double cut : cuts) {
    if (value < cut) break;
    ++idx;
  }
  return idx;
}

}  // namespace

IngestResult ingest(std::istream& in, const SchemaConfig& schema) {
  const CsvTable table = read_csv(in);

  auto need = [&](const std::string& name) {
    const int idx = table.column(name);
    if (idx < 0) throw ValidationError("ingest: required column \"" + name + "\" not in header");
    return idx;
  };
  std::vector<int> x_idx, u_idx;
  for (const auto& c : schema.x_cols) x_idx.push_back(need(c));
  for (const auto& c : schema.u_cols) u_idx.push_back(need(c));
  const int race_idx = need(schema.race_col);
  const int searched_idx = need(schema.searched_col);
  const int contraband_idx = need(schema.contraband_col);

  IngestResult result;
  IngestReport& report = result.report;
  report.rows_total = table.rows.size();

  // First pass: validate, filter, and collect raw keepable rows so that
  // dictionary codes depend only on the kept data.
  struct RawRow {
    std::vector<std::string> x;
    int r, searched;
    std::optional<int> contraband;
    std::vector<int> u;
  };
  std::vector<RawRow> raw;
  std::vector<bool> is_binned(schema.x_cols.size());
  for (std::size_t c = 0; c < schema.x_cols.size(); ++c) {
    is_binned[c] = schema.numeric_bins.count(schema.x_cols[c]) > 0;
  }

  for (const auto& row : table.rows) {
    const std::string race = trim(row[race_idx]);
    int r;
    if (contains(schema.group0_values, race)) {
      r = 0;
    } else if (contains(schema.group1_values, race)) {
      r = 1;
    } else {
      ++report.filtered_group;
      continue;
    }

    const int searched = parse_flag(row[searched_idx], schema, "searched");
    if (searched < 0) {
      ++report.dropped_missing;
      continue;
    }
    const int contraband = parse_flag(row[contraband_idx], schema, "contraband");
    if (searched == 0 && contraband == 1) {
      ++report.dropped_inconsistent;
      continue;
    }
    if (searched == 1 && contraband < 0) {
      ++report.dropped_missing;
      continue;
    }

    RawRow rr;
    rr.r = r;
    rr.searched = searched;
    if (searched == 1) rr.contraband = contraband;
    bool ok = true;
    for (std::size_t c = 0; c < x_idx.size() && ok; ++c) {
      const std::string v = trim(row[x_idx[c]]);
      if (v.empty()) {
        ++report.dropped_missing;
        ok = false;
      } else {
        rr.x.push_back(v);
      }
    }
    if (!ok) continue;
    for (std::size_t c = 0; c < u_idx.size() && ok; ++c) {
      const int flag = parse_flag(row[u_idx[c]], schema, "stop-reason");
      if (flag < 0) {
        ++report.dropped_missing;
        ok = false;
      } else {
        rr.u.push_back(flag);
      }
    }
    if (!ok) continue;
    raw.push_back(std::move(rr));
  }

  // Dictionaries for unbinned columns, sorted for determinism.
  std::vector<std::map<std::string, int>> dict(schema.x_cols.size());
  for (std::size_t c = 0; c < schema.x_cols.size(); ++c) {
    if (is_binned[c]) continue;
    std::set<std::string> values;
    for (const RawRow& rr : raw) values.insert(rr.x[c]);
    int code = 0;
    for (const std::string& v : values) dict[c][v] = code++;
  }

  report.x_level_names.resize(schema.x_cols.size());
  for (std::size_t c = 0; c < schema.x_cols.size(); ++c) {
    if (is_binned[c]) {
      const auto& cuts = schema.numeric_bins.at(schema.x_cols[c]);
      for (std::size_t b = 0; b <= cuts.size(); ++b) {
        const std::string lo = b == 0 ? "-inf" : fmt_double(cuts[b - 1]);
        const std::string hi = b == cuts.size() ? "inf" : fmt_double(cuts[b]);
        report.x_level_names[c].push_back("[" + lo + "," + hi + ")");
      }
    } else {
      report.x_level_names[c].resize(dict[c].size());
      for (const auto& [label, code] : dict[c]) report.x_level_names[c][code] = label;
    }
  }

  for (const RawRow& rr : raw) {
    StopRecord rec;
    rec.r = rr.r;
    rec.searched = rr.searched;
    rec.contraband = rr.contraband;
    rec.u = rr.u;
    bool ok = true;
    for (std::size_t c = 0; c < rr.x.size(); ++c) {
      if (is_binned[c]) {
        try {
          const double v = std::stod(rr.x[c]);
          rec.x.push_back(bin_index(v, schema.numeric_bins.at(schema.x_cols[c])));
        } catch (const std::exception&) {
          ++report.dropped_malformed;
          ok = false;
          break;
        }
      } else {
        rec.x.push_back(dict[c].at(rr.x[c]));
      }
    }
    if (ok) result.records.push_back(std::move(rec));
  }
  report.rows_kept = result.records.size();
  return result;
}

IngestResult ingest_file(const std::string& path, const SchemaConfig& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open csv file: " + path);
  return ingest(in, schema);
}

std::pair<std::vector<StopRecord>, std::vector<StopRecord>> split_searched(
    const std::vector<StopRecord>& records, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("split: fraction must lie in (0,1)");
  }
  std::vector<std::size_t> searched;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].searched == 1) searched.push_back(i);
  }
  if (searched.empty()) throw ValidationError("split: no searched records");

  SplitMix64 rng(seed);
  for (std::size_t i = searched.size(); i > 1; --i) {  // Fisher-Yates
    const std::size_t j = rng.next() % i;
    std::swap(searched[i - 1], searched[j]);
  }
  const std::size_t size_a = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(searched.size())));
  std::pair<std::vector<StopRecord>, std::vector<StopRecord>> out;
  out.first.reserve(size_a);
  out.second.reserve(searched.size() - size_a);
  for (std::size_t k = 0; k < searched.size(); ++k) {
    (k < size_a ? out.first : out.second).push_back(records[searched[k]]);
  }
  return out;
}

namespace {

std::vector<double> encode_stop(const StopRecord& rec,
                                const std::vector<std::vector<int>>& x_levels,
                                std::size_t n_u) {
  if (rec.x.size() != x_levels.size() || rec.u.size() != n_u) {
    throw ValidationError("risk model: record layout does not match the model");
  }
  std::vector<double> row;
  for (std::size_t c = 0; c < x_levels.size(); ++c) {
    const auto& levels = x_levels[c];
    const auto it = std::lower_bound(levels.begin(), levels.end(), rec.x[c]);
    if (it == levels.end() || *it != rec.x[c]) {
      throw PositivityError("risk model: unseen level in feature column " + std::to_string(c));
    }
    for (std::size_t l = 1; l < levels.size(); ++l) {
      row.push_back(levels[l] == rec.x[c] ? 1.0 : 0.0);
    }
  }
  row.push_back(static_cast<double>(rec.r));
  for (std::size_t j = 0; j < n_u; ++j) row.push_back(static_cast<double>(rec.u[j]));
  return row;
}

}  // namespace

double RiskModel::score(const StopRecord& rec) const {
  if (degenerate) return constant_score;
  const std::vector<double> row = encode_stop(rec, x_levels, n_u);
  double eta = beta[0];
  for (std::size_t j = 0; j < row.size(); ++j) eta += beta[j + 1] * row[j];
  return sigmoid(eta);
}

nlohmann::json RiskModel::to_json() const {
  return nlohmann::json{{"x_levels", x_levels},
                        {"n_u", n_u},
                        {"beta", beta},
                        {"degenerate", degenerate},
                        {"constant_score", constant_score},
                        {"fit_meta",
                         {{"iterations", meta.iterations},
                          {"grad_max_norm", meta.grad_max_norm},
                          {"converged", meta.converged}}}};
}

RiskModel fit_risk_model(const std::vector<StopRecord>& labeled,
                         const std::vector<StopRecord>& encoding_domain,
                         const LogisticFitOptions& opts) {
  if (labeled.empty()) throw ValidationError("risk model: empty training partition");
  for (const StopRecord& rec : labeled) {
    if (rec.searched != 1 || !rec.contraband) {
      throw ValidationError("risk model: training partition must be searched and labeled");
    }
  }
  const std::vector<StopRecord>& domain = encoding_domain.empty() ? labeled : encoding_domain;

  RiskModel model;
  model.n_u = labeled.front().u.size();
  const std::size_t ncols = labeled.front().x.size();
  std::vector<std::set<int>> levels(ncols);
  for (const StopRecord& rec : domain) {
    if (rec.x.size() != ncols) throw ValidationError("risk model: ragged feature rows");
    for (std::size_t c = 0; c < ncols; ++c) levels[c].insert(rec.x[c]);
  }
  model.x_levels.resize(ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    model.x_levels[c].assign(levels[c].begin(), levels[c].end());
  }

  double label_sum = 0.0;
  for (const StopRecord& rec : labeled) label_sum += *rec.contraband;
  if (label_sum == 0.0 || label_sum == static_cast<double>(labeled.size())) {
    model.degenerate = true;
    model.constant_score = label_sum / static_cast<double>(labeled.size());
    model.meta = FitMeta{0, 0.0, true};
    return model;
  }

  std::map<std::vector<double>, std::pair<double, double>> grouped;
  for (const StopRecord& rec : labeled) {
    auto& slot = grouped[encode_stop(rec, model.x_levels, model.n_u)];
    slot.first += *rec.contraband;
    slot.second += 1.0;
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> successes, trials;
  rows.reserve(grouped.size());
  for (const auto& [row, counts] : grouped) {
    rows.push_back(row);
    successes.push_back(counts.first);
    trials.push_back(counts.second);
  }
  const LogisticFit lf = fit_logistic(rows, successes, trials, opts);
  model.beta = lf.beta;
  model.meta = lf.meta;
  return model;
}

Thresholds calibrate_thresholds(const std::array<std::vector<double>, 2>& scores_by_group,
                                double overall_rate, double aa_share) {
  if (!(overall_rate > 0.0 && overall_rate < 1.0)) {
    throw ValidationError("calibrate: overall rate must lie in (0,1)");
  }
  if (!(aa_share > 0.0 && aa_share < 1.0)) {
    throw ValidationError("calibrate: aa_share must lie in (0,1)");
  }
  const double n_total =
      static_cast<double>(scores_by_group[0].size() + scores_by_group[1].size());
  if (n_total == 0.0) throw ValidationError("calibrate: no scores");

  Thresholds thr;
  thr.target[1] = static_cast<std::size_t>(std::floor(aa_share * overall_rate * n_total));
  thr.target[0] = static_cast<std::size_t>(std::floor((1.0 - aa_share) * overall_rate * n_total));

  std::array<double, 2> cuts{};
  for (int r = 0; r <= 1; ++r) {
    const std::vector<double>& scores = scores_by_group[r];
    const std::size_t k = thr.target[r];
    if (k > scores.size()) {
      throw ValidationError("calibrate: target of " + std::to_string(k) + " searches exceeds " +
                            std::to_string(scores.size()) + " group-" + std::to_string(r) +
                            " records");
    }
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double c;
    if (k == 0) {
      c = 1.0;  // model scores are strictly below 1
    } else if (k == sorted.size()) {
      c = 0.0;  // and strictly above 0
    } else {
      c = sorted[k];  // (k+1)-th largest: exactly k scores lie strictly above barring ties
    }
    cuts[r] = c;
    thr.realized[r] = static_cast<std::size_t>(
        std::count_if(scores.begin(), scores.end(), [&](double s) { return s > c; }));
  }
  thr.c0 = cuts[0];
  thr.c1 = cuts[1];
  thr.tau = thr.c0 - thr.c1;
  return thr;
}

SyntheticSearchSet synthesize(const std::vector<StopRecord>& part_b,
                              const Thresholds& thresholds, const RiskModel& risk) {
  SyntheticSearchSet out;
  out.thresholds = thresholds;
  out.records.reserve(part_b.size());
  std::size_t searched = 0, searched_g1 = 0;
  for (const StopRecord& rec : part_b) {
    const double cut = rec.r == 1 ? thresholds.c1 : thresholds.c0;
    StopRecord synth = rec;
    if (risk.score(rec) > cut) {
      synth.searched = 1;
      ++searched;
      searched_g1 += rec.r;
      // contraband stays as observed
    } else {
      synth.searched = 0;
      synth.contraband.reset();
    }
    out.records.push_back(std::move(synth));
  }
  out.realized_rate = part_b.empty() ? 0.0 : static_cast<double>(searched) / part_b.size();
  out.realized_aa_share = searched == 0 ? 0.0 : static_cast<double>(searched_g1) / searched;
  return out;
}

void PipelineConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ValidationError("pipeline: split_fraction must lie in (0,1)");
  }
  if (!(search_rate > 0.0 && search_rate < 1.0)) {
    throw ValidationError("pipeline: search_rate must lie in (0,1)");
  }
  if (!(top_share_q > 0.0 && top_share_q < 1.0)) {
    throw ValidationError("pipeline: top_share_q must lie in (0,1)");
  }
  for (double s : share_grid) {
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("pipeline: shares must lie in (0,1)");
  }
  if (bootstrap_resamples < 0) throw ValidationError("pipeline: negative bootstrap count");
}

namespace {

std::vector<double> default_share_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 6; ++i) grid.push_back(0.80 + 0.025 * i);
  return grid;
}

ObservedDataset synthetic_to_dataset(const SyntheticSearchSet& synth) {
  ObservedDataset data;
  data.provenance.source = "sqf_pipeline";
  data.records.reserve(synth.records.size());
  for (const StopRecord& rec : synth.records) {
    ObservedRecord o;
    o.x = rec.x;
    o.r = rec.r;
    o.s = rec.searched;
    if (rec.searched == 1) o.y = rec.contraband.value();
    data.records.push_back(std::move(o));
  }
  return data;
}

}  // namespace

FigureResult replicate_figure(const std::vector<StopRecord>& records,
                              const PipelineConfig& cfg_in, std::uint64_t seed,
                              int threads) {
  PipelineConfig cfg = cfg_in;
  if (cfg.share_grid.empty()) cfg.share_grid = default_share_grid();
  cfg.validate();

  auto [part_a, part_b] = split_searched(records, cfg.split_fraction, derive_seed(seed, 0));
  if (part_b.empty()) throw ValidationError("pipeline: partition B is empty");

  std::vector<StopRecord> all_searched;
  all_searched.reserve(part_a.size() + part_b.size());
  all_searched.insert(all_searched.end(), part_a.begin(), part_a.end());
  all_searched.insert(all_searched.end(), part_b.begin(), part_b.end());
  const RiskModel risk = fit_risk_model(part_a, all_searched);

  std::array<std::vector<double>, 2> scores_by_group;
  for (const StopRecord& rec : part_b) {
    scores_by_group[rec.r].push_back(risk.score(rec));
  }

  const std::array<Exercise, 3> exercises{Exercise::y_given_selected, Exercise::s_full,
                                          Exercise::ys_full};

  FigureResult result;
  std::vector<std::vector<FigurePoint>> per_share(cfg.share_grid.size());
  std::vector<Thresholds> thresholds(cfg.share_grid.size());

  parallel_for(cfg.share_grid.size(), threads, [&](std::size_t i) {
    const double share = cfg.share_grid[i];
    const Thresholds thr = calibrate_thresholds(scores_by_group, cfg.search_rate, share);
    const SyntheticSearchSet synth = synthesize(part_b, thr, risk);
    const ObservedDataset data = synthetic_to_dataset(synth);

    std::vector<FigurePoint> points;
    SplitMix64 boot_rng(derive_seed(seed, 1 + i));
    for (Exercise ex : exercises) {
      const Predictor predictor = fit(data, ex, /*group_blind=*/false, cfg.refit);
      std::vector<double> scores;
      std::vector<int> groups;
      scores.reserve(data.records.size());
      for (const ObservedRecord& rec : data.records) {
        scores.push_back(predictor.predict(rec.x, rec.r));
        groups.push_back(rec.r);
      }
      const TopShareResult ts = top_share(scores, groups, cfg.top_share_q);

      std::array<double, 2> se{0.0, 0.0};
      if (cfg.bootstrap_resamples > 0) {
        std::array<double, 2> sum{0.0, 0.0}, sumsq{0.0, 0.0};
        std::vector<double> bscores(scores.size());
        std::vector<int> bgroups(scores.size());
        for (int b = 0; b < cfg.bootstrap_resamples; ++b) {
          for (std::size_t k = 0; k < scores.size(); ++k) {
            const std::size_t pick = boot_rng.next() % scores.size();
            bscores[k] = scores[pick];
            bgroups[k] = groups[pick];
          }
          const TopShareResult bts = top_share(bscores, bgroups, cfg.top_share_q);
          for (int r = 0; r <= 1; ++r) {
            sum[r] += bts.fraction[r];
            sumsq[r] += bts.fraction[r] * bts.fraction[r];
          }
        }
        const double nb = cfg.bootstrap_resamples;
        for (int r = 0; r <= 1; ++r) {
          const double var = std::max(0.0, sumsq[r] / nb - (sum[r] / nb) * (sum[r] / nb));
          se[r] = std::sqrt(var * nb / std::max(1.0, nb - 1.0));
        }
      }
      for (int r = 0; r <= 1; ++r) {
        points.push_back(FigurePoint{share, thr.tau, ex, r, ts.fraction[r], se[r]});
      }
    }
    per_share[i] = std::move(points);
    thresholds[i] = thr;
  });

  for (std::size_t i = 0; i < per_share.size(); ++i) {
    result.points.insert(result.points.end(), per_share[i].begin(), per_share[i].end());
  }
  result.thresholds = thresholds;
  return result;
}

std::string FigureResult::to_csv() const {
  std::ostringstream out;
  out << "aa_share,tau,exercise,group,top_share\n";
  for (const FigurePoint& p : points) {
    out << fmt_double(p.aa_share) << ',' << fmt_double(p.tau) << ',' << to_string(p.exercise)
        << ',' << p.group << ',' << fmt_double(p.top_share) << '\n';
  }
  return out.str();
}

std::string FigureResult::to_svg() const {
  SvgChart chart;
  chart.title = "Group top-share of predicted risk vs. selection bias";
  chart.x_label = "tau = c0 - c1";
  chart.y_label = "fraction of group in top half";
  const std::array<Exercise, 3> exercises{Exercise::y_given_selected, Exercise::s_full,
                                          Exercise::ys_full};
  for (Exercise ex : exercises) {
    for (int r = 0; r <= 1; ++r) {
      SvgSeries series;
      series.label = to_string(ex) + (r == 1 ? " g1" : " g0");
      for (const FigurePoint& p : points) {
        if (p.exercise == ex && p.group == r) {
          series.x.push_back(p.tau);
          series.y.push_back(p.top_share);
        }
      }
      if (!series.x.empty()) chart.series.push_back(std::move(series));
    }
  }
  return chart.render();
}

}  // namespace selab
