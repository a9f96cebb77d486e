#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delaydense/asymptotics.hpp"
#include "delaydense/density.hpp"
#include "delaydense/ergostats.hpp"
#include "delaydense/transient.hpp"

namespace delaydense {

/// Comment lines written at the top of every output file (without the "# ").
/// The first line always names the library version.
struct FileHeader {
  std::string title;
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string key, std::string value) { entries.emplace_back(std::move(key), std::move(value)); }
  std::vector<std::string> lines() const;
};

/// Writes a whole file through one handle; Io error on failure.
void write_text(const std::filesystem::path& path, const std::string& content);

class CsvWriter {
 public:
  CsvWriter(const FileHeader& header, std::string columns);

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(std::string_view v);
  void end_row();

  const std::string& str() const noexcept { return out_; }
  void save(const std::filesystem::path& path) const { write_text(path, out_); }

 private:
  std::string out_;
  bool row_started_ = false;
};

void write_solution_csv(const std::filesystem::path& path, const FileHeader& header, const SolutionPath& p);
void write_density_csv(const std::filesystem::path& path, const FileHeader& header, const Density1D& rho);
/// Density columns side by side; all densities must share edges.
void write_densities_csv(const std::filesystem::path& path, const FileHeader& header,
                         std::span<const std::string> names, std::span<const Density1D> rhos);

/// P2 graymap, top row = highest current-value bin, counts scaled to 0..255.
void write_histogram2d_pgm(const std::filesystem::path& path, const FileHeader& header, const Histogram2D& h);
void write_transition_csv(const std::filesystem::path& path, const FileHeader& header, const TransitionMatrix& p);

/// Gray level used for a label in raster images (0 for unresolved pixels).
int label_gray(int label, std::size_t n_labels);
/// P2 graymap of the labels; the sidecar lists label,gray,attractor_kind.
void write_raster_pgm(const std::filesystem::path& path, const std::filesystem::path& sidecar,
                      const FileHeader& header, const BasinRaster& r,
                      std::span<const AttractorTemplate> templates);
void write_raster_csv(const std::filesystem::path& path, const FileHeader& header, const BasinRaster& r);

void write_templates(const std::filesystem::path& path, const FileHeader& header,
                     std::span<const AttractorTemplate> templates);
std::vector<AttractorTemplate> read_templates(const std::filesystem::path& path);

void write_saddle_run_csv(const std::filesystem::path& path, const FileHeader& header, const SaddleRun& run);
void write_correlation_csv(const std::filesystem::path& path, const FileHeader& header,
                           const CorrelationDimension& cd);
void write_spectrum_csv(const std::filesystem::path& path, const FileHeader& header, const LyapunovSpectrum& s);
void write_support_curve_csv(const std::filesystem::path& path, const FileHeader& header, const SupportCurve& c);
void write_scpf_csv(const std::filesystem::path& path, const FileHeader& header, std::span<const ScpfStep> steps);

/// Points from a CSV file: one point per non-comment line, comma separated.
PointCloud read_point_cloud(const std::filesystem::path& path);

}  // namespace delaydense
