#pragma once

#include "picscore/density.hpp"
#include "picscore/synth.hpp"

namespace picscore::testing {

/// Default generator (mu_g 0.7, mu_f 0.2, sigma 0.1), 50k + 50k draws.
inline SynthConfig default_config(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  return c;
}

inline const LabeledScoreSet& default_train() {
  static const LabeledScoreSet set = generate(default_config(1));
  return set;
}

inline const LabeledScoreSet& default_test() {
  static const LabeledScoreSet set = generate(default_config(2));
  return set;
}

inline const DensityModel& default_model() {
  static const DensityModel model = fit_model(default_train());
  return model;
}

}  // namespace picscore::testing
