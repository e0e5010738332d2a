#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "distcurv/fields.hpp"
#include "distcurv/framecalc.hpp"
#include "distcurv/util.hpp"

namespace distcurv::models {

// A chart model: one coordinate box with a metric and named structure on it.
// Homogeneous models given purely by constant bracket scalars carry no chart;
// they exercise the closed-form layer only.
struct Model {
  std::string name;
  bool has_chart = true;
  fields::Chart chart;
  fields::MetricField g;
  std::map<std::string, fields::OneForm> one_forms;
  std::map<std::string, fields::Distribution> distributions;
  std::map<std::string, fields::Frame> frames;
  std::optional<framecalc::FrameData> constant_data;
};

const std::vector<std::string>& builtin_names();
Model builtin(const std::string& name);

// Parse and validate a model file (JSON, expressions in the shared grammar).
Model load_model(const std::string& path);

// Nondegeneracy checks over the default grid: SPD metric, nonvanishing
// one-forms, independent spanning pairs, nondegenerate frames, periodicity
// of every expression along periodic axes.
void validate_model(const Model& m);

// A plane field by name: a named distribution, else the kernel of a named
// one-form.
fields::Distribution resolve_distribution(const Model& m,
                                          const std::string& name);

// First named frame that is g-orthonormal and spans d (the preferred frame
// for closed-form runs), if any.
std::optional<fields::Frame> orthonormal_frame_for(
    const Model& m, const fields::Distribution& d);

// Shipped frame else Gram-Schmidt.
fields::Frame adapted_frame(const Model& m, const fields::Distribution& d);

// First named frame adapted to the transverse pair: X in both kernels, Y in
// the first, n transverse (annihilated checks only; not orthonormality).
std::optional<fields::Frame> bicontact_frame(const Model& m,
                                             const fields::OneForm& alpha,
                                             const fields::OneForm& beta);

}  // namespace distcurv::models
