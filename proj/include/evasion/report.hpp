#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evasion/attack.hpp"
#include "evasion/evaluation.hpp"

namespace evasion {

// --- trace files -----------------------------------------------------------
//
//   # evasion-trace/1
//   # key value            (free-form metadata, one per line)
//   m,F,g_target,d_from_x0
//   0,...                  (one row per trace point)
//   x0 v1 v2 ...
//   first_evading <index> v1 v2 ...   or   first_evading none
//   final v1 v2 ...

inline constexpr const char* kTraceFormatVersion = "evasion-trace/1";

struct TraceRow {
  std::size_t m = 0;
  double F = 0.0;
  double g_target = 0.0;
  double d_from_x0 = 0.0;
};

struct TraceFile {
  std::map<std::string, std::string> meta;
  std::vector<TraceRow> rows;
  Vector x0;
  std::optional<std::size_t> first_evading_index;
  Vector first_evading;
  Vector final_point;
};

/// The trace must have been judged (g_target filled).
void write_trace(const AttackTrace& trace, const std::map<std::string, std::string>& meta,
                 const std::filesystem::path& path);
TraceFile read_trace(const std::filesystem::path& path);

// --- images ------------------------------------------------------------------

/// Side length of a square image with `dim` pixels; throws if dim is not a square.
std::size_t square_side(std::size_t dim);

/// Binary 8-bit PGM (P5); pixel values in [0, 1] are clamped and scaled to 0..255.
void write_pgm(const std::filesystem::path& path, VectorView pixels, std::size_t width, std::size_t height);

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  Vector pixels;  // row-major, in [0, 1]
};

GrayImage read_pgm(const std::filesystem::path& path);

// --- sweep outputs -----------------------------------------------------------

/// Model family from a grid-cell descriptor ("rbf_svm_C1_gamma0.1" -> "rbf_svm").
std::string model_family(const std::string& descriptor);

/// File-name stem identifying a curve, e.g. "mlp_m5__LK__lambda500".
std::string curve_stem(const SecurityCurve& curve);

/// One row per (model, scenario, lambda, split, d_max).
void write_results_csv(const SweepResult& result, const std::filesystem::path& path);
/// One row per (model, scenario, lambda, d_max) with mean and std across splits.
void write_aggregate_csv(const SweepResult& result, const std::filesystem::path& path);
/// Columns d_max, mean_fn, std_fn / 2.
void write_plot_data(const SecurityCurve& curve, const std::filesystem::path& path);
void write_cells_csv(const SweepResult& result, const std::filesystem::path& path);

}  // namespace evasion
