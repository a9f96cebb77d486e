#include "delaydense/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "delaydense/error.hpp"
#include "delaydense/format.hpp"
#include "delaydense/version.hpp"

namespace delaydense {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "nan") return NAN;
    throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line) + ": malformed number '" + s + "'");
  }
  return v;
}

std::string comment_block(const FileHeader& header) {
  std::string out;
  for (const auto& l : header.lines()) out += "# " + l + "\n";
  return out;
}

template <class Body>
void emit_pgm(const std::filesystem::path& path, const FileHeader& header, std::size_t w, std::size_t h, Body gray) {
  std::string out = "P2\n" + comment_block(header);
  out += std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (c) out += ' ';
      out += std::to_string(gray(r, c));
    }
    out += '\n';
  }
  write_text(path, out);
}

}  // namespace

std::vector<std::string> FileHeader::lines() const {
  std::vector<std::string> out;
  out.push_back("delaydense " + std::string(kVersion) + (title.empty() ? "" : " " + title));
  for (const auto& [k, v] : entries) out.push_back(k + " = " + v);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.close();
  if (!f) throw Error(Errc::Io, "write failed: " + path.string());
}

CsvWriter::CsvWriter(const FileHeader& header, std::string columns) {
  out_ = comment_block(header) + columns + "\n";
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

CsvWriter& CsvWriter::cell(std::string_view v) {
  if (row_started_) out_ += ',';
  out_ += v;
  row_started_ = true;
  return *this;
}

void CsvWriter::end_row() {
  out_ += '\n';
  row_started_ = false;
}

void write_solution_csv(const std::filesystem::path& path, const FileHeader& header, const SolutionPath& p) {
  CsvWriter w(header, "t,x");
  for (std::size_t k = 0; k < p.size(); ++k) {
    w.cell(p.time(k)).cell(p.x[k]);
    w.end_row();
  }
  w.save(path);
}

void write_density_csv(const std::filesystem::path& path, const FileHeader& header, const Density1D& rho) {
  std::string name = "density";
  write_densities_csv(path, header, std::span(&name, 1), std::span(&rho, 1));
}

void write_densities_csv(const std::filesystem::path& path, const FileHeader& header,
                         std::span<const std::string> names, std::span<const Density1D> rhos) {
  if (names.size() != rhos.size() || rhos.empty()) throw Error(Errc::InvalidParam, "one name per density");
  std::string cols = "x_lo,x_hi";
  for (const auto& n : names) cols += "," + n;
  for (const auto& r : rhos)
    if (r.edges != rhos[0].edges) throw Error(Errc::InvalidParam, "densities must share edges");
  CsvWriter w(header, cols);
  for (std::size_t i = 0; i < rhos[0].bins(); ++i) {
    w.cell(rhos[0].edges[i]).cell(rhos[0].edges[i + 1]);
    for (const auto& r : rhos) w.cell(r.density[i]);
    w.end_row();
  }
  w.save(path);
}

void write_histogram2d_pgm(const std::filesystem::path& path, const FileHeader& header, const Histogram2D& h) {
  std::uint64_t peak = 0;
  for (auto c : h.counts) peak = std::max(peak, c);
  FileHeader hd = header;
  hd.add("columns", "x(t-1) bins " + format_double(h.edges_lag.front()) + ".." + format_double(h.edges_lag.back()));
  hd.add("rows", "x(t) bins " + format_double(h.edges_cur.back()) + ".." + format_double(h.edges_cur.front()));
  hd.add("peak_count", std::to_string(peak));
  emit_pgm(path, hd, h.cols(), h.rows(), [&](std::size_t r, std::size_t c) -> int {
    if (peak == 0) return 0;
    auto v = h.at(h.rows() - 1 - r, c);
    return static_cast<int>(std::llround(255.0 * static_cast<double>(v) / static_cast<double>(peak)));
  });
}

void write_transition_csv(const std::filesystem::path& path, const FileHeader& header, const TransitionMatrix& p) {
  CsvWriter w(header, "i,j,p_ij");
  for (std::size_t i = 0; i < p.r; ++i)
    for (std::size_t j = 0; j < p.r; ++j)
      if (p(i, j) != 0.0) {
        w.cell(static_cast<long long>(i)).cell(static_cast<long long>(j)).cell(p(i, j));
        w.end_row();
      }
  w.save(path);
}

int label_gray(int label, std::size_t n_labels) {
  if (label == kUnresolved) return 0;
  return static_cast<int>(std::llround(255.0 * (label + 1) / static_cast<double>(std::max<std::size_t>(n_labels, 1))));
}

void write_raster_pgm(const std::filesystem::path& path, const std::filesystem::path& sidecar,
                      const FileHeader& header, const BasinRaster& r,
                      std::span<const AttractorTemplate> templates) {
  FileHeader hd = header;
  hd.add("sidecar", sidecar.filename().string());
  emit_pgm(path, hd, r.width, r.height,
           [&](std::size_t row, std::size_t col) { return label_gray(r.at(row, col), templates.size()); });
  CsvWriter w(header, "label,gray,attractor_kind");
  w.cell(static_cast<long long>(kUnresolved)).cell(0LL).cell("unresolved");
  w.end_row();
  for (const auto& t : templates) {
    w.cell(static_cast<long long>(t.label))
        .cell(static_cast<long long>(label_gray(t.label, templates.size())))
        .cell(attractor_kind_name(t.kind));
    w.end_row();
  }
  w.save(sidecar);
}

void write_raster_csv(const std::filesystem::path& path, const FileHeader& header, const BasinRaster& r) {
  CsvWriter w(header, "A,B,label");
  for (std::size_t row = 0; row < r.height; ++row)
    for (std::size_t col = 0; col < r.width; ++col) {
      w.cell(r.a_at(col)).cell(r.b_at(row)).cell(static_cast<long long>(r.at(row, col)));
      w.end_row();
    }
  w.save(path);
}

void write_templates(const std::filesystem::path& path, const FileHeader& header,
                     std::span<const AttractorTemplate> templates) {
  CsvWriter w(header, "label,kind,h,period,tol,samples");
  for (const auto& t : templates) {
    std::string s;
    for (std::size_t k = 0; k < t.samples.size(); ++k) s += (k ? " " : "") + format_double(t.samples[k]);
    w.cell(static_cast<long long>(t.label)).cell(attractor_kind_name(t.kind)).cell(t.h).cell(t.period).cell(t.tol).cell(s);
    w.end_row();
  }
  w.save(path);
}

std::vector<AttractorTemplate> read_templates(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Io, "cannot read " + path.string());
  std::vector<AttractorTemplate> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(f, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (t.rfind("label,", 0) == 0) continue;
    }
    auto cols = split(t, ',');
    if (cols.size() != 6)
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected 6 columns");
    AttractorTemplate a;
    a.label = static_cast<int>(parse_number(cols[0], path, lineno));
    try {
      a.kind = parse_attractor_kind(cols[1]);
    } catch (const Error&) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": unknown kind '" + cols[1] + "'");
    }
    a.h = parse_number(cols[2], path, lineno);
    a.period = parse_number(cols[3], path, lineno);
    a.tol = parse_number(cols[4], path, lineno);
    std::istringstream ss(cols[5]);
    std::string tok;
    while (ss >> tok) a.samples.push_back(parse_number(tok, path, lineno));
    if (a.samples.empty())
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": template has no samples");
    out.push_back(std::move(a));
  }
  return out;
}

void write_saddle_run_csv(const std::filesystem::path& path, const FileHeader& header, const SaddleRun& run) {
  CsvWriter w(header, "step,x_right_endpoint,escape_time,stagger_norm");
  for (std::size_t n = 0; n < run.size(); ++n) {
    w.cell(static_cast<long long>(n)).cell(run.states[n].right());
    w.cell(static_cast<long long>(n < run.escape.size() ? run.escape[n] : -1));
    w.cell(n < run.stagger_norm.size() ? run.stagger_norm[n] : 0.0);
    w.end_row();
  }
  w.save(path);
}

void write_correlation_csv(const std::filesystem::path& path, const FileHeader& header,
                           const CorrelationDimension& cd) {
  FileHeader hd = header;
  hd.add("dimension", format_double(cd.dimension));
  hd.add("fit_window", format_double(cd.r[cd.fit_lo]) + ".." + format_double(cd.r[cd.fit_hi]));
  CsvWriter w(hd, "r,C");
  for (std::size_t i = 0; i < cd.r.size(); ++i) {
    w.cell(cd.r[i]).cell(cd.c[i]);
    w.end_row();
  }
  w.save(path);
}

void write_spectrum_csv(const std::filesystem::path& path, const FileHeader& header, const LyapunovSpectrum& s) {
  FileHeader hd = header;
  hd.add("units", "bits per time unit");
  hd.add("averaged_steps", std::to_string(s.steps));
  CsvWriter w(hd, "index,lambda");
  for (std::size_t i = 0; i < s.exponents.size(); ++i) {
    w.cell(static_cast<long long>(i + 1)).cell(s.exponents[i]);
    w.end_row();
  }
  w.save(path);
}

void write_support_curve_csv(const std::filesystem::path& path, const FileHeader& header, const SupportCurve& c) {
  CsvWriter w(header, "s,weight,y0,y1");
  for (std::size_t i = 0; i < c.size(); ++i) {
    w.cell(c.s[i]).cell(c.weight[i]).cell(c.y0(i)).cell(c.y1(i));
    w.end_row();
  }
  w.save(path);
}

void write_scpf_csv(const std::filesystem::path& path, const FileHeader& header, std::span<const ScpfStep> steps) {
  CsvWriter w(header, "iteration,l1_change,mean,stddev");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    w.cell(static_cast<long long>(i + 1)).cell(steps[i].l1_change).cell(steps[i].mean).cell(steps[i].stddev);
    w.end_row();
  }
  w.save(path);
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Io, "cannot read " + path.string());
  PointCloud cloud;
  cloud.dim = 0;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> p;
  while (std::getline(f, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cols = split(t, ',');
    // A leading non-numeric line is a column header.
    if (cloud.coords.empty() && cloud.dim == 0) {
      double v;
      auto r = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), v);
      if (r.ec != std::errc()) {
        cloud.dim = cols.size();
        continue;
      }
    }
    if (cloud.dim == 0) cloud.dim = cols.size();
    if (cols.size() != cloud.dim)
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(cloud.dim) + " columns");
    p.clear();
    for (const auto& c : cols) p.push_back(parse_number(c, path, lineno));
    cloud.push(p);
  }
  if (cloud.dim == 0) cloud.dim = 1;
  return cloud;
}

}  // namespace delaydense
