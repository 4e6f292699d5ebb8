#include "selab/generator.hpp"

#include <cmath>

#include "selab/logistic.hpp"
#include "selab/rng.hpp"
#include "selab/util.hpp"

namespace selab {

namespace {

const char* kAgeValues[] = {"20", "30", "40", "50"};        // bands <25, 25-34, 35-44, 45+
const char* kSexValues[] = {"F", "M"};
const char* kBuildValues[] = {"T", "M", "H"};
const char* kHourValues[] = {"300", "900", "1500", "2100"};  // band representatives

// Reason-flag column names follow the public stop-level data; extra flags
// beyond six get numbered names.
const char* kReasonCols[] = {"cs_objcs", "cs_descr", "cs_casng",
                             "cs_lkout", "cs_drgtr", "cs_furtv"};

std::string reason_col_name(std::size_t j) {
  if (j < sizeof(kReasonCols) / sizeof(kReasonCols[0])) return kReasonCols[j];
  return "cs_extra" + std::to_string(j);
}

int draw_categorical(const std::vector<double>& probs, SplitMix64& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void check_probs(const std::vector<double>& probs, const char* name) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ValidationError(std::string("generator: negative probability in ") + name);
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ValidationError(std::string("generator: ") + name + " must sum to 1");
  }
}

}  // namespace

void GeneratorConfig::validate() const {
  if (!(group1_share > 0.0 && group1_share < 1.0)) {
    throw ValidationError("generator: group1_share must lie in (0,1)");
  }
  check_probs(build_probs, "build_probs");
  check_probs(location_probs_g0, "location_probs_g0");
  check_probs(location_probs_g1, "location_probs_g1");
  check_probs(hour_probs, "hour_probs");
  if (location_probs_g0.size() != location_probs_g1.size()) {
    throw ValidationError("generator: location probability vectors differ in length");
  }
  const std::size_t k = u_logit.size();
  if (u_shift.size() != k || y_u.size() != k || s_u.size() != k) {
    throw ValidationError("generator: u coefficient vectors differ in length");
  }
  if (y_location.size() != location_probs_g0.size()) {
    throw ValidationError("generator: y_location length must match location count");
  }
}

std::vector<StopRecord> generate_stops(const GeneratorConfig& cfg, std::size_t n,
                                       std::uint64_t seed) {
  cfg.validate();
  if (n < 1) throw ValidationError("generator: n must be >= 1");
  SplitMix64 rng(seed);
  const std::size_t n_u = cfg.u_logit.size();

  std::vector<StopRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    StopRecord rec;
    rec.r = rng.bernoulli(cfg.group1_share) ? 1 : 0;

    const bool young = rng.bernoulli(rec.r == 1 ? cfg.p_young_g1 : cfg.p_young_g0);
    const int age_band = (young ? 0 : 2) + (rng.bernoulli(0.5) ? 1 : 0);
    const int sex = rng.bernoulli(cfg.p_male) ? 1 : 0;
    const int build = draw_categorical(cfg.build_probs, rng);
    const int location =
        draw_categorical(rec.r == 1 ? cfg.location_probs_g1 : cfg.location_probs_g0, rng);
    const int hour = draw_categorical(cfg.hour_probs, rng);
    rec.x = Features{age_band, sex, build, location, hour};

    rec.u.resize(n_u);
    for (std::size_t j = 0; j < n_u; ++j) {
      rec.u[j] = rng.bernoulli(sigmoid(cfg.u_logit[j] + rec.r * cfg.u_shift[j])) ? 1 : 0;
    }

    double y_logit = cfg.y_intercept + cfg.y_young * (age_band <= 1) + cfg.y_male * sex +
                     cfg.y_build_heavy * (build == 2) + cfg.y_location[location] +
                     cfg.y_r * rec.r;
    double s_logit = cfg.s_intercept + cfg.s_young * (age_band <= 1) + cfg.s_r * rec.r;
    for (std::size_t j = 0; j < n_u; ++j) {
      y_logit += cfg.y_u[j] * rec.u[j];
      s_logit += cfg.s_u[j] * rec.u[j];
    }
    const int contraband = rng.bernoulli(sigmoid(y_logit)) ? 1 : 0;
    rec.searched = rng.bernoulli(sigmoid(s_logit)) ? 1 : 0;
    if (rec.searched == 1) rec.contraband = contraband;
    out.push_back(std::move(rec));
  }
  return out;
}

void write_stops_csv(const std::vector<StopRecord>& records, std::ostream& out) {
  std::size_t n_u = records.empty() ? 0 : records.front().u.size();
  out << "age,sex,build,pct,timestop,race";
  for (std::size_t j = 0; j < n_u; ++j) out << ',' << reason_col_name(j);
  out << ",searched,contrabn\n";
  for (const StopRecord& rec : records) {
    if (rec.x.size() != 5 || rec.u.size() != n_u) {
      throw ValidationError("write_stops_csv: record does not match the generator schema");
    }
    out << kAgeValues[rec.x[0]] << ',' << kSexValues[rec.x[1]] << ',' << kBuildValues[rec.x[2]]
        << ',' << (rec.x[3] + 1) << ',' << kHourValues[rec.x[4]] << ','
        << (rec.r == 1 ? 'B' : 'W');
    for (std::size_t j = 0; j < n_u; ++j) out << ',' << (rec.u[j] ? 'Y' : 'N');
    out << ',' << (rec.searched ? 'Y' : 'N') << ',';
    if (rec.contraband) out << (*rec.contraband ? 'Y' : 'N');
    out << '\n';
  }
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& slot) {
  if (j.contains(key)) slot = j.at(key).get<T>();
}

}  // namespace

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig cfg;
  try {
    read_if(j, "group1_share", cfg.group1_share);
    read_if(j, "p_young_g0", cfg.p_young_g0);
    read_if(j, "p_young_g1", cfg.p_young_g1);
    read_if(j, "p_male", cfg.p_male);
    read_if(j, "build_probs", cfg.build_probs);
    read_if(j, "location_probs_g0", cfg.location_probs_g0);
    read_if(j, "location_probs_g1", cfg.location_probs_g1);
    read_if(j, "hour_probs", cfg.hour_probs);
    read_if(j, "u_logit", cfg.u_logit);
    read_if(j, "u_shift", cfg.u_shift);
    read_if(j, "y_intercept", cfg.y_intercept);
    read_if(j, "y_u", cfg.y_u);
    read_if(j, "y_young", cfg.y_young);
    read_if(j, "y_male", cfg.y_male);
    read_if(j, "y_build_heavy", cfg.y_build_heavy);
    read_if(j, "y_r", cfg.y_r);
    read_if(j, "y_location", cfg.y_location);
    read_if(j, "s_intercept", cfg.s_intercept);
    read_if(j, "s_u", cfg.s_u);
    read_if(j, "s_young", cfg.s_young);
    read_if(j, "s_r", cfg.s_r);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("generator config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json generator_config_to_json(const GeneratorConfig& cfg) {
  return nlohmann::json{{"group1_share", cfg.group1_share},
                        {"p_young_g0", cfg.p_young_g0},
                        {"p_young_g1", cfg.p_young_g1},
                        {"p_male", cfg.p_male},
                        {"build_probs", cfg.build_probs},
                        {"location_probs_g0", cfg.location_probs_g0},
                        {"location_probs_g1", cfg.location_probs_g1},
                        {"hour_probs", cfg.hour_probs},
                        {"u_logit", cfg.u_logit},
                        {"u_shift", cfg.u_shift},
                        {"y_intercept", cfg.y_intercept},
                        {"y_u", cfg.y_u},
                        {"y_young", cfg.y_young},
                        {"y_male", cfg.y_male},
                        {"y_build_heavy", cfg.y_build_heavy},
                        {"y_r", cfg.y_r},
                        {"y_location", cfg.y_location},
                        {"s_intercept", cfg.s_intercept},
                        {"s_u", cfg.s_u},
                        {"s_young", cfg.s_young},
                        {"s_r", cfg.s_r}};
}

}  // namespace selab
