#include "evasion/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace evasion {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << std::setprecision(17);
  return out;
}

void write_vector(std::ostream& out, VectorView v) {
  for (double x : v) out << ' ' << x;
}

Vector parse_vector(std::istringstream& in, const std::string& where) {
  Vector v;
  std::string tok;
  while (in >> tok) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw DataError(where + ": bad number '" + tok + "'");
    }
  }
  return v;
}

}  // namespace

void write_trace(const AttackTrace& trace, const std::map<std::string, std::string>& meta,
                 const std::filesystem::path& path) {
  if (trace.g_target.size() != trace.points.size())
    throw std::invalid_argument("trace has not been judged against a target");
  auto out = open_out(path);
  out << "# " << kTraceFormatVersion << '\n';
  for (const auto& [k, v] : meta) out << "# " << k << ' ' << v << '\n';
  out << "m,F,g_target,d_from_x0\n";
  for (std::size_t i = 0; i < trace.points.size(); ++i)
    out << i << ',' << trace.objective_values[i] << ',' << trace.g_target[i] << ',' << trace.distances[i] << '\n';
  out << "x0";
  write_vector(out, trace.points.front());
  out << "\nfirst_evading";
  if (const auto fe = trace.first_evading()) {
    out << ' ' << *fe;
    write_vector(out, trace.points[*fe]);
  } else {
    out << " none";
  }
  out << "\nfinal";
  write_vector(out, trace.final_point());
  out << '\n';
}

TraceFile read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open trace file");
  TraceFile tf;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false, version_seen = false;
  bool have_x0 = false, have_first = false, have_final = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      if (!version_seen) {
        if (key != kTraceFormatVersion) throw DataError(where + ": not a trace file (expected " + kTraceFormatVersion + ")");
        version_seen = true;
      } else {
        tf.meta[key] = value;
      }
      continue;
    }
    if (!version_seen) throw DataError(where + ": missing format line");
    if (!header_seen) {
      if (line != "m,F,g_target,d_from_x0") throw DataError(where + ": unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "x0") {
      tf.x0 = parse_vector(ls, where);
      have_x0 = true;
    } else if (tag == "first_evading") {
      std::string idx;
      ls >> idx;
      if (idx != "none") {
        try {
          tf.first_evading_index = std::stoul(idx);
        } catch (const std::exception&) {
          throw DataError(where + ": bad first_evading index '" + idx + "'");
        }
        tf.first_evading = parse_vector(ls, where);
      }
      have_first = true;
    } else if (tag == "final") {
      tf.final_point = parse_vector(ls, where);
      have_final = true;
    } else {
      TraceRow r;
      char c1 = 0, c2 = 0, c3 = 0;
      std::istringstream rs(line);
      if (!(rs >> r.m >> c1 >> r.F >> c2 >> r.g_target >> c3 >> r.d_from_x0) || c1 != ',' || c2 != ',' || c3 != ',')
        throw DataError(where + ": malformed trace row");
      tf.rows.push_back(r);
    }
  }
  if (!have_x0 || !have_first || !have_final || tf.rows.empty())
    throw DataError(path.string() + ": truncated trace file");
  if (tf.final_point.size() != tf.x0.size() || (tf.first_evading_index && tf.first_evading.size() != tf.x0.size()))
    throw DataError(path.string() + ": vectors of different lengths");
  return tf;
}

std::size_t square_side(std::size_t dim) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
  if (dim == 0 || side * side != dim)
    throw std::invalid_argument("dimensionality " + std::to_string(dim) + " is not a square image");
  return side;
}

void write_pgm(const std::filesystem::path& path, VectorView pixels, std::size_t width, std::size_t height) {
  if (pixels.size() != width * height) throw DimensionError(width * height, pixels.size());
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::string bytes(pixels.size(), '\0');
  for (std::size_t i = 0; i < pixels.size(); ++i)
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0)));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open image");
  std::string magic;
  std::size_t maxval = 0;
  GrayImage img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || !in || maxval == 0 || maxval > 255) throw DataError(path.string() + ": not an 8-bit P5 image");
  in.get();  // single whitespace before the raster
  std::string bytes(img.width * img.height, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw DataError(path.string() + ": truncated raster");
  img.pixels.resize(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.pixels[i] = static_cast<double>(static_cast<unsigned char>(bytes[i])) / static_cast<double>(maxval);
  return img;
}

std::string model_family(const std::string& descriptor) {
  const auto pos = descriptor.find("_C");
  if (pos != std::string::npos) return descriptor.substr(0, pos);
  const auto m = descriptor.find("_m");
  return m == std::string::npos ? descriptor : descriptor.substr(0, m);
}

std::string curve_stem(const SecurityCurve& c) {
  std::ostringstream s;
  s << c.classifier << "__" << to_string(c.scenario) << "__lambda" << c.lambda;
  return s.str();
}

void write_results_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "family,model,scenario,lambda,split,d_max,fn\n";
  for (const auto& r : result.raw)
    out << model_family(r.classifier) << ',' << r.classifier << ',' << to_string(r.scenario) << ',' << r.lambda
        << ',' << r.split << ',' << r.d_max << ',' << r.fn << '\n';
}

void write_aggregate_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "family,model,scenario,lambda,fp_target,d_max,mean_fn,std_fn,n_splits\n";
  for (const auto& c : result.curves)
    for (const auto& p : c.points)
      out << model_family(c.classifier) << ',' << c.classifier << ',' << to_string(c.scenario) << ',' << c.lambda
          << ',' << c.fp_target << ',' << p.d_max << ',' << p.mean_fn << ',' << p.std_fn << ','
          << c.per_split.size() << '\n';
}

void write_plot_data(const SecurityCurve& c, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# " << c.classifier << ' ' << to_string(c.scenario) << " lambda=" << c.lambda << " fp=" << c.fp_target
      << '\n';
  out << "# d_max mean_fn half_std\n";
  for (const auto& p : c.points) out << p.d_max << ' ' << p.mean_fn << ' ' << p.std_fn / 2.0 << '\n';
}

void write_cells_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "model,split,threshold,train_accuracy,clean_fn,clean_fp\n";
  for (const auto& c : result.cells)
    out << c.classifier << ',' << c.split << ',' << c.threshold << ',' << c.train_accuracy << ',' << c.clean_fn
        << ',' << c.clean_fp << '\n';
}

}  // namespace evasion
