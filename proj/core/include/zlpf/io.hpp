#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zlpf/fit.hpp"
#include "zlpf/presets.hpp"

namespace zlpf {

// Chain spec document (JSON). Top-level fields:
//   dimension      integer >= 2
//   layers         array of layer objects, mutually exclusive with "preset"
//   applies_first  "first" (default: layers listed in application order,
//                  first element acts first on base samples) or "last"
//   preset         { "family": ..., family parameters }
// Layer objects: {"kind":"zoom","kappa":k}, {"kind":"rotation","matrix":[[..]]}
// or {"kind":"rotation","target":[..]}, and {"kind":"linear_project",
// "variant":"full"|"diagonal"|"constrained", "matrix"|"scales":..,
// "kappa": k (constrained only)}.
FlowChain chain_from_json(const std::string& text);
std::string chain_to_json(const FlowChain& chain);

FlowChain load_chain_spec(const std::string& path);
void save_chain_spec(const std::string& path, const FlowChain& chain);

// Family tag of the preset block of a spec file, if it has one.
std::optional<std::string> spec_preset_family(const std::string& path);

struct SampleSet {
  std::vector<SpherePoint> points;
  std::vector<double> log_prob;  // empty when the file had no logp column
};

// CSV with header x1,...,xD[,logp]. Every row must be within 1e-9 of unit
// norm (rows are renormalized on load). Values are written with 17
// significant digits.
SampleSet load_samples(const std::string& path);
void save_samples(const std::string& path, const SampleSet& samples);

FitConfig fit_config_from_json(const std::string& text);
FitConfig load_fit_config(const std::string& path);

void save_loss_trace(const std::string& path, const std::vector<double>& trace);

}  // namespace zlpf
