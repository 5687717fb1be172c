#pragma once

#include <cstdint>

#include "evasion/data.hpp"

namespace evasion {

/// Two-class keyword-count data shaped like PDF structure features: legitimate
/// documents are larger and rich in layout keywords, malicious ones are small
/// and carry active-content keywords. Counts are nonnegative integers.
struct SyntheticPdfOptions {
  std::size_t n_legit = 500;
  std::size_t n_malicious = 500;
  std::size_t dim = 100;
  std::uint64_t seed = 1;
  double count_scale = 3.0;           // multiplies every keyword rate
  double obfuscated_fraction = 0.5;   // malicious documents with a few very large counts
  std::size_t n_markers = 1;          // single-occurrence legitimate marker keywords
  double marker_malicious_presence = 0.03;
  double active_malicious_presence = 0.4;  // mean presence of active-content keywords in malicious documents
};

Dataset make_synthetic_pdf(const SyntheticPdfOptions& options);

}  // namespace evasion
