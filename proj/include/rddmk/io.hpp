#pragma once

// Text formats for the command-line tool: CSV readers with strict per-site
// validation and writers whose output is byte-identical across reruns.
// Floating point fields are printed with 17 significant digits so every
// emitted value parses back to the same double.

#include <span>
#include <string>
#include <vector>

#include "rddmk/engine.hpp"
#include "rddmk/simgen.hpp"

namespace rddmk::io {

std::string format_double(double v);

struct Csv {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;   // -1 when absent
  int require(const std::string& name) const;  // ParseError when absent
  double number(int row, int col) const;
  long integer(int row, int col) const;
};

Csv read_csv(const std::string& path, bool has_header = true);

// id,x,y; extra columns are ignored so result files read back as site files
SiteSet read_sites(const std::string& path);

// x,y per row, ring closed implicitly
Polygon read_boundary(const std::string& path);

// headerless n x n matrix, rows in site order
std::vector<double> read_distance_matrix(const std::string& path, int n_sites);

// grid_index column of a subsample file
std::vector<int> read_subsample(const std::string& path);

// Observations are matched to sites row by row; the id column must repeat
// the site ids in order. Symmetric matrices use upper-triangle columns
// m11,m12,...,mpp; Cholesky factors use h11,...,hpp; unit vectors v1,...,vd.
// Correlation data may arrive either as m-columns or as factor h-columns.
std::vector<SPDMatrix> read_spd_observations(const std::string& path,
                                             const SiteSet& sites);
std::vector<CholFactor> read_chol_observations(const std::string& path,
                                               const SiteSet& sites);
std::vector<SpherePoint> read_sphere_observations(const std::string& path,
                                                  const SiteSet& sites);

void write_sites(const std::string& path, const SiteSet& sites);
void write_boundary(const std::string& path, const Polygon& poly);
void write_grid(const std::string& path, std::span<const GridPoint> grid,
                std::span<const std::string> ids);
void write_subsample(const std::string& path, std::span<const int> indices,
                     std::span<const std::string> grid_ids);

// xy may be empty (field files); otherwise adds x,y columns (predictions)
void write_points(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy, std::span<const SPDMatrix> pts);
void write_points(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy, std::span<const CholFactor> pts);
void write_points(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy, std::span<const SpherePoint> pts);

void write_scalar(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy, const std::string& column,
                  std::span<const double> values);

void write_cv_json(const std::string& path, const SiteSet& sites,
                   const CvResult& cv);

struct VariogramRow {
  int iteration = 0;
  int tile = 0;
  double lag = 0.0;
  double gamma_emp = 0.0;  // NaN for empty bins
  double gamma_fit = 0.0;
  double weight = 0.0;
};

void write_variogram_rows(const std::string& path,
                          std::span<const VariogramRow> rows);

void write_study_summary(const std::string& path, const McStudyResult& res);
void write_study_cells(const std::string& path, const McStudyResult& res);
// one row per (replicate, k, grid point) with an observed-site flag
void write_study_spe(const std::string& path, const McStudyResult& res);

}  // namespace rddmk::io
