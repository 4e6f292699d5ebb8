#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selab/population.hpp"
#include "selab/rng.hpp"

namespace selab {

enum class Variant { baseline, fewer_labels };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

// Prediction-error distributions for noisy decision-makers. Both families
// have a strictly increasing hazard f/(1-F), which is exactly what the
// comparative statics need; that is why only these two are offered.
enum class NoiseFamily { logistic, normal };

NoiseFamily noise_family_from_string(const std::string& s);
std::string to_string(NoiseFamily f);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::logistic;
  double scale = 1.0;
  // Homoskedastic across groups unless this override is set for r=1.
  std::optional<double> scale_group1;

  double scale_for(int r) const { return (r == 1 && scale_group1) ? *scale_group1 : scale; }
};

// Threshold decision rule. The effective threshold for group r is
// c - tau*r (baseline) or c + tau*r (fewer_labels); selection uses a weak
// inequality at the threshold.
struct DecisionRule {
  double c = 0.5;
  double tau = 0.0;
  Variant variant = Variant::baseline;
  std::optional<NoiseSpec> noise;

  double threshold(int r) const {
    return variant == Variant::baseline ? c - tau * r : c + tau * r;
  }
  DecisionRule with_tau(double t) const {
    DecisionRule out = *this;
    out.tau = t;
    return out;
  }
  void validate() const;
};

double noise_cdf(const NoiseSpec& spec, int r, double z);
double noise_pdf(const NoiseSpec& spec, int r, double z);
// 1 - CDF, computed without cancellation so hazards stay meaningful far
// into the upper tail.
double noise_survival(const NoiseSpec& spec, int r, double z);
double noise_hazard(const NoiseSpec& spec, int r, double z);
double sample_noise(const NoiseSpec& spec, int r, SplitMix64& rng);

// Deterministic rule: 1 iff mu >= threshold(r). Throws if the rule is noisy.
int select(const DecisionRule& rule, double mu, int r);

// Noisy rule evaluated at a realized error: 1 iff mu + eps >= threshold(r).
int select_noisy(const DecisionRule& rule, double mu, int r, double eps);

// P(S=1 | mu, r) = 1 - F(threshold(r) - mu) in closed form. Throws if the
// rule is deterministic.
double selection_probability(const DecisionRule& rule, double mu, int r);

// P(S=1 | cell) for either kind of rule: an exact 0/1 indicator when
// deterministic, the closed-form probability when noisy.
double cell_selection_probability(const DecisionRule& rule, const Cell& cell);

struct CellSelection {
  Cell cell;
  double p_select = 0.0;
  double selected_mass = 0.0;
};

// Exact per-cell selection table: selected_mass = mass * P(S=1 | cell).
// Noisy rules are propagated as probabilities, never as draws, so
// downstream conditionals carry no Monte Carlo error.
struct SelectionTable {
  std::vector<CellSelection> rows;

  double selected_mass(int x, int r) const;
  double group_selected_mass(int r) const;
};

SelectionTable apply_rule(const Population& pop, const DecisionRule& rule);

}  // namespace selab
