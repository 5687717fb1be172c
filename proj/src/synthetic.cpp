#include "evasion/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "evasion/rng.hpp"

namespace evasion {

namespace {

struct KeywordProfile {
  double presence_legit, rate_legit;
  double presence_mal, rate_mal;
};

}  // namespace

Dataset make_synthetic_pdf(const SyntheticPdfOptions& options) {
  if (options.dim < 10) throw std::invalid_argument("synthetic benchmark needs at least 10 features");
  if (options.n_markers > options.dim / 10)
    throw std::invalid_argument("at most dim / 10 marker keywords are supported");
  const std::size_t d = options.dim;
  Rng rng(options.seed);

  // Layout keywords appear in nearly every legitimate document with stable
  // counts; active-content keywords mark malicious documents; the remaining
  // keywords are rare in both classes. Legitimate documents therefore form a
  // compact cluster while malicious ones are scattered.
  const std::size_t n_layout = d / 10;
  const std::size_t n_active = d / 10;
  std::vector<KeywordProfile> profile(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (j < options.n_markers) {
      // Single-occurrence markers (linearization-style keywords) that nearly
      // every legitimate document carries and few malicious ones do.
      const double mal = options.marker_malicious_presence;
      profile[j] = {rng.uniform(0.85, 0.97), 0.0, rng.uniform(0.5 * mal, 1.5 * mal), 0.0};
    } else if (j < n_layout) {
      profile[j] = {rng.uniform(0.85, 0.98), rng.uniform(1.0, 4.0), rng.uniform(0.1, 0.4), rng.uniform(0.5, 2.0)};
    } else if (j < n_layout + n_active) {
      const double a = options.active_malicious_presence;
      profile[j] = {rng.uniform(0.0, 0.03), 0.5, std::min(1.0, rng.uniform(a - 0.2, a + 0.2)), rng.uniform(0.5, 3.0)};
    } else {
      const double p = rng.uniform(0.0, 0.08);
      profile[j] = {p, rng.uniform(0.2, 1.5), p * rng.uniform(0.5, 2.0), rng.uniform(0.2, 3.0)};
    }
  }

  std::vector<Sample> samples;
  samples.reserve(options.n_legit + options.n_malicious);
  const auto draw = [&](Label y) {
    const bool legit = y == Label::Legitimate;
    Vector x(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& k = profile[j];
      if (rng.uniform() >= (legit ? k.presence_legit : k.presence_mal)) continue;
      x[j] = 1.0 + static_cast<double>(rng.poisson(options.count_scale * (legit ? k.rate_legit : k.rate_mal)));
    }
    // Obfuscated malicious documents repeat a few objects many times.
    if (!legit && rng.uniform() < options.obfuscated_fraction) {
      const auto n_junk = 1 + rng.below(3);
      for (std::uint64_t r = 0; r < n_junk; ++r) {
        const auto j = n_layout + n_active + rng.below(d - n_layout - n_active);
        x[j] = std::round(rng.uniform(20.0, 100.0));
      }
    }
    samples.push_back({std::move(x), y});
  };
  for (std::size_t i = 0; i < options.n_legit; ++i) draw(Label::Legitimate);
  for (std::size_t i = 0; i < options.n_malicious; ++i) draw(Label::Malicious);
  // Interleave so row order carries no class information.
  rng.shuffle(samples);

  std::vector<std::string> names(d);
  for (std::size_t j = 0; j < d; ++j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "kw%03zu", j);
    names[j] = buf;
  }
  return Dataset(d, std::move(samples), std::move(names));
}

}  // namespace evasion
