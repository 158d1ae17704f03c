#include "rddmk/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace rddmk::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string row_context(const Csv& csv, int row) {
  return csv.path + ": data row " + std::to_string(row + 1);
}

// column names m11,m12,...,mpp / h11,... for the packed upper triangle
std::vector<std::string> triangle_columns(char prefix, int p) {
  std::vector<std::string> out;
  for (int i = 1; i <= p; ++i)
    for (int j = i; j <= p; ++j)
      out.push_back(std::string(1, prefix) + std::to_string(i) +
                    std::to_string(j));
  return out;
}

// p with p (p + 1) / 2 == q, or 0
int triangle_dim(int q) {
  int p = static_cast<int>(std::floor(std::sqrt(2.0 * q)));
  for (int c : {p - 1, p, p + 1})
    if (c >= 1 && c * (c + 1) / 2 == q) return c;
  return 0;
}

bool reserved_column(const std::string& name) {
  return name == "id" || name == "x" || name == "y" || name == "phi" ||
         name == "r";
}

// columns that carry the observation payload, in header order
std::vector<int> payload_columns(const Csv& csv) {
  std::vector<int> out;
  for (size_t c = 0; c < csv.header.size(); ++c)
    if (!reserved_column(csv.header[c])) out.push_back(static_cast<int>(c));
  return out;
}

void check_observation_shape(const Csv& csv, const SiteSet& sites) {
  if (static_cast<int>(csv.rows.size()) != sites.size())
    fail(ErrorCode::RowCountMismatch,
         "'" + csv.path + "' has " + std::to_string(csv.rows.size()) +
             " observation rows for " + std::to_string(sites.size()) +
             " sites");
}

void check_row_id(const Csv& csv, int id_col, int row, const Site& site) {
  const std::string& got = csv.rows[row][static_cast<size_t>(id_col)];
  if (got != site.id)
    fail(ErrorCode::ParseError,
         "id '" + got + "' does not match site '" + site.id +
             "'; observations must follow the site order",
         row_context(csv, row));
}

// expected payload header for the derived dimension, else ParseError
void check_payload_names(const Csv& csv, std::span<const int> cols,
                         const std::vector<std::string>& expected) {
  for (size_t i = 0; i < expected.size(); ++i) {
    const std::string& got = csv.header[static_cast<size_t>(cols[i])];
    if (got != expected[i])
      fail(ErrorCode::ParseError,
           "expected column '" + expected[i] + "', found '" + got + "'",
           csv.path);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorCode::IoError, "failed while writing '" + path + "'");
}

void write_header(std::ofstream& out, std::span<const std::string> names) {
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out << ',';
    out << names[i];
  }
  out << '\n';
}

// shared body of the three write_points overloads; entries(row) returns the
// payload values for point row
template <class EntriesFn>
void write_points_impl(const std::string& path,
                       std::span<const std::string> ids,
                       std::span<const Point2> xy,
                       const std::vector<std::string>& payload,
                       size_t n, EntriesFn entries) {
  if (ids.size() != n || (!xy.empty() && xy.size() != n))
    fail(ErrorCode::PreconditionViolation, "point writer length mismatch");
  std::ofstream out = open_out(path);
  std::vector<std::string> header{"id"};
  if (!xy.empty()) {
    header.push_back("x");
    header.push_back("y");
  }
  header.insert(header.end(), payload.begin(), payload.end());
  write_header(out, header);
  for (size_t i = 0; i < n; ++i) {
    out << ids[i];
    if (!xy.empty())
      out << ',' << format_double(xy[i].x) << ',' << format_double(xy[i].y);
    for (double v : entries(i)) out << ',' << format_double(v);
    out << '\n';
  }
  finish_out(out, path);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int Csv::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int Csv::require(const std::string& name) const {
  int c = column(name);
  if (c < 0)
    fail(ErrorCode::ParseError, "missing column '" + name + "'", path);
  return c;
}

double Csv::number(int row, int col) const {
  const std::string& s = rows[static_cast<size_t>(row)][static_cast<size_t>(col)];
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    fail(ErrorCode::ParseError,
         "'" + s + "' in column '" + header[static_cast<size_t>(col)] +
             "' is not a number",
         row_context(*this, row));
  return v;
}

long Csv::integer(int row, int col) const {
  const std::string& s = rows[static_cast<size_t>(row)][static_cast<size_t>(col)];
  const char* begin = s.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    fail(ErrorCode::ParseError,
         "'" + s + "' in column '" + header[static_cast<size_t>(col)] +
             "' is not an integer",
         row_context(*this, row));
  return v;
}

Csv read_csv(const std::string& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  Csv out;
  out.path = path;
  std::string line;
  bool expect_header = has_header;
  size_t width = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (expect_header) {
      out.header = std::move(fields);
      width = out.header.size();
      expect_header = false;
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      fail(ErrorCode::ParseError,
           "expected " + std::to_string(width) + " fields, found " +
               std::to_string(fields.size()),
           path + ": line " + std::to_string(lineno));
    out.rows.push_back(std::move(fields));
  }
  if (has_header && out.header.empty())
    fail(ErrorCode::ParseError, "file is empty", path);
  return out;
}

SiteSet read_sites(const std::string& path) {
  Csv csv = read_csv(path);
  int id = csv.require("id"), x = csv.require("x"), y = csv.require("y");
  std::vector<Site> sites;
  sites.reserve(csv.rows.size());
  for (size_t r = 0; r < csv.rows.size(); ++r) {
    int row = static_cast<int>(r);
    sites.push_back({csv.rows[r][static_cast<size_t>(id)], csv.number(row, x),
                     csv.number(row, y)});
  }
  return SiteSet::validated(std::move(sites));
}

Polygon read_boundary(const std::string& path) {
  Csv csv = read_csv(path);
  int x = csv.require("x"), y = csv.require("y");
  if (csv.rows.size() < 3)
    fail(ErrorCode::ParseError, "a boundary needs at least 3 vertices", path);
  std::vector<Point2> ring;
  ring.reserve(csv.rows.size());
  for (size_t r = 0; r < csv.rows.size(); ++r) {
    int row = static_cast<int>(r);
    ring.push_back({csv.number(row, x), csv.number(row, y)});
  }
  return Polygon(std::move(ring));
}

std::vector<double> read_distance_matrix(const std::string& path, int n_sites) {
  Csv csv = read_csv(path, /*has_header=*/false);
  size_t n = static_cast<size_t>(n_sites);
  if (csv.rows.size() != n || (n > 0 && csv.rows[0].size() != n))
    fail(ErrorCode::RowCountMismatch,
         "'" + path + "' is " + std::to_string(csv.rows.size()) + "x" +
             std::to_string(csv.rows.empty() ? 0 : csv.rows[0].size()) +
             " but there are " + std::to_string(n_sites) + " sites");
  csv.header.assign(n, "d");  // column names for number() diagnostics
  std::vector<double> out(n * n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      out[i * n + j] =
          csv.number(static_cast<int>(i), static_cast<int>(j));
  return out;
}

std::vector<int> read_subsample(const std::string& path) {
  Csv csv = read_csv(path);
  int col = csv.require("grid_index");
  std::vector<int> out;
  out.reserve(csv.rows.size());
  for (size_t r = 0; r < csv.rows.size(); ++r)
    out.push_back(static_cast<int>(csv.integer(static_cast<int>(r), col)));
  return out;
}

std::vector<SPDMatrix> read_spd_observations(const std::string& path,
                                             const SiteSet& sites) {
  Csv csv = read_csv(path);
  check_observation_shape(csv, sites);
  int id = csv.require("id");
  std::vector<int> cols = payload_columns(csv);
  int p = triangle_dim(static_cast<int>(cols.size()));
  if (p == 0)
    fail(ErrorCode::ParseError,
         std::to_string(cols.size()) +
             " value columns do not form a symmetric matrix upper triangle",
         path);
  check_payload_names(csv, cols, triangle_columns('m', p));

  std::vector<SPDMatrix> out;
  out.reserve(csv.rows.size());
  std::vector<double> upper(cols.size());
  for (int r = 0; r < static_cast<int>(csv.rows.size()); ++r) {
    check_row_id(csv, id, r, sites[r]);
    for (size_t c = 0; c < cols.size(); ++c) upper[c] = csv.number(r, cols[c]);
    try {
      out.push_back(SPDMatrix::validated(SymMatrix::from_upper(p, upper)));
    } catch (const Error& e) {
      fail(ErrorCode::InvalidMatrix,
           "observation for site '" + sites[r].id +
               "' is not positive definite",
           e.what());
    }
  }
  return out;
}

std::vector<CholFactor> read_chol_observations(const std::string& path,
                                               const SiteSet& sites) {
  Csv csv = read_csv(path);
  check_observation_shape(csv, sites);
  int id = csv.require("id");
  std::vector<int> cols = payload_columns(csv);
  int p = triangle_dim(static_cast<int>(cols.size()));
  if (p == 0)
    fail(ErrorCode::ParseError,
         std::to_string(cols.size()) +
             " value columns do not form a matrix upper triangle",
         path);
  bool factor_form = csv.column("h11") >= 0;
  if (!factor_form && csv.column("m11") < 0)
    fail(ErrorCode::ParseError,
         "expected correlation columns m11,... or factor columns h11,...",
         path);
  check_payload_names(csv, cols, triangle_columns(factor_form ? 'h' : 'm', p));

  std::vector<CholFactor> out;
  out.reserve(csv.rows.size());
  std::vector<double> upper(cols.size());
  for (int r = 0; r < static_cast<int>(csv.rows.size()); ++r) {
    check_row_id(csv, id, r, sites[r]);
    for (size_t c = 0; c < cols.size(); ++c) upper[c] = csv.number(r, cols[c]);
    if (factor_form) {
      Matrix h(p, p);
      size_t c = 0;
      for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) h(i, j) = upper[c++];
      try {
        out.push_back(CholFactor::validated(h));
      } catch (const Error& e) {
        fail(ErrorCode::InvalidMatrix,
             "observation for site '" + sites[r].id +
                 "' is not a valid Cholesky factor",
             e.what());
      }
      continue;
    }
    SymMatrix m = SymMatrix::from_upper(p, upper);
    for (int i = 0; i < p; ++i)
      if (std::abs(m(i, i) - 1.0) > 1e-9)
        fail(ErrorCode::InvalidMatrix,
             "observation for site '" + sites[r].id +
                 "' is not a correlation matrix: diagonal entry m" +
                 std::to_string(i + 1) + std::to_string(i + 1) + " is " +
                 format_double(m(i, i)));
    try {
      out.push_back(corr_to_chol(m));
    } catch (const Error& e) {
      fail(ErrorCode::InvalidMatrix,
           "observation for site '" + sites[r].id +
               "' is not a full-rank correlation matrix",
           e.what());
    }
  }
  return out;
}

std::vector<SpherePoint> read_sphere_observations(const std::string& path,
                                                  const SiteSet& sites) {
  Csv csv = read_csv(path);
  check_observation_shape(csv, sites);
  int id = csv.require("id");
  std::vector<int> cols = payload_columns(csv);
  int d = static_cast<int>(cols.size());
  if (d < 2)
    fail(ErrorCode::ParseError, "unit vectors need at least 2 components",
         path);
  std::vector<std::string> expected;
  for (int i = 1; i <= d; ++i) expected.push_back("v" + std::to_string(i));
  check_payload_names(csv, cols, expected);

  std::vector<SpherePoint> out;
  out.reserve(csv.rows.size());
  for (int r = 0; r < static_cast<int>(csv.rows.size()); ++r) {
    check_row_id(csv, id, r, sites[r]);
    Vec v(d);
    for (int c = 0; c < d; ++c) v[c] = csv.number(r, cols[static_cast<size_t>(c)]);
    try {
      out.push_back(SpherePoint::make(v));
    } catch (const Error& e) {
      fail(ErrorCode::InvalidMatrix,
           "observation for site '" + sites[r].id + "' is not a unit vector",
           e.what());
    }
  }
  return out;
}

void write_sites(const std::string& path, const SiteSet& sites) {
  std::ofstream out = open_out(path);
  out << "id,x,y\n";
  for (const Site& s : sites.sites())
    out << s.id << ',' << format_double(s.x) << ',' << format_double(s.y)
        << '\n';
  finish_out(out, path);
}

void write_boundary(const std::string& path, const Polygon& poly) {
  std::ofstream out = open_out(path);
  out << "x,y\n";
  for (const Point2& p : poly.ring())
    out << format_double(p.x) << ',' << format_double(p.y) << '\n';
  finish_out(out, path);
}

void write_grid(const std::string& path, std::span<const GridPoint> grid,
                std::span<const std::string> ids) {
  if (ids.size() != grid.size())
    fail(ErrorCode::PreconditionViolation, "grid writer length mismatch");
  std::ofstream out = open_out(path);
  out << "id,phi,r,x,y\n";
  for (size_t i = 0; i < grid.size(); ++i)
    out << ids[i] << ',' << format_double(grid[i].phi) << ','
        << format_double(grid[i].r) << ',' << format_double(grid[i].x) << ','
        << format_double(grid[i].y) << '\n';
  finish_out(out, path);
}

void write_subsample(const std::string& path, std::span<const int> indices,
                     std::span<const std::string> grid_ids) {
  std::ofstream out = open_out(path);
  out << "grid_index,id\n";
  for (int i : indices)
    out << i << ',' << grid_ids[static_cast<size_t>(i)] << '\n';
  finish_out(out, path);
}

void write_points(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy, std::span<const SPDMatrix> pts) {
  int p = pts.empty() ? 0 : pts[0].dim();
  write_points_impl(path, ids, xy, triangle_columns('m', p), pts.size(),
                    [&](size_t i) { return pts[i].sym().upper(); });
}

void write_points(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy, std::span<const CholFactor> pts) {
  int p = pts.empty() ? 0 : pts[0].dim();
  write_points_impl(path, ids, xy, triangle_columns('h', p), pts.size(),
                    [&](size_t i) {
                      std::vector<double> v;
                      for (int a = 0; a < p; ++a)
                        for (int b = a; b < p; ++b) v.push_back(pts[i](a, b));
                      return v;
                    });
}

void write_points(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy,
                  std::span<const SpherePoint> pts) {
  int d = pts.empty() ? 0 : pts[0].dim();
  std::vector<std::string> payload;
  for (int i = 1; i <= d; ++i) payload.push_back("v" + std::to_string(i));
  write_points_impl(path, ids, xy, payload, pts.size(), [&](size_t i) {
    std::vector<double> v;
    for (int c = 0; c < d; ++c) v.push_back(pts[i][c]);
    return v;
  });
}

void write_scalar(const std::string& path, std::span<const std::string> ids,
                  std::span<const Point2> xy, const std::string& column,
                  std::span<const double> values) {
  write_points_impl(path, ids, xy, {column}, values.size(), [&](size_t i) {
    return std::vector<double>{values[i]};
  });
}

void write_cv_json(const std::string& path, const SiteSet& sites,
                   const CvResult& cv) {
  if (static_cast<int>(cv.per_site.size()) != sites.size())
    fail(ErrorCode::PreconditionViolation, "cv writer length mismatch");
  nlohmann::json per = nlohmann::json::array();
  for (int i = 0; i < sites.size(); ++i)
    per.push_back({{"id", sites[i].id}, {"spe", cv.per_site[i]}});
  nlohmann::json j{
      {"mean", cv.mean}, {"median", cv.median}, {"per_site", per}};
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish_out(out, path);
}

void write_variogram_rows(const std::string& path,
                          std::span<const VariogramRow> rows) {
  std::ofstream out = open_out(path);
  out << "iteration,tile,lag,gamma_emp,gamma_fit,weight\n";
  for (const VariogramRow& r : rows)
    out << r.iteration << ',' << r.tile << ',' << format_double(r.lag) << ','
        << format_double(r.gamma_emp) << ',' << format_double(r.gamma_fit)
        << ',' << format_double(r.weight) << '\n';
  finish_out(out, path);
}

void write_study_summary(const std::string& path, const McStudyResult& res) {
  std::ofstream out = open_out(path);
  out << (res.has_rho ? "k,mean,median,sd,rho_mean,rho_median,rho_sd"
                      : "k,mean,median,sd")
      << '\n';
  for (const McSummary& s : res.summary) {
    out << s.k << ',' << format_double(s.mean) << ','
        << format_double(s.median) << ',' << format_double(s.sd);
    if (res.has_rho)
      out << ',' << format_double(s.rho_mean) << ','
          << format_double(s.rho_median) << ',' << format_double(s.rho_sd);
    out << '\n';
  }
  finish_out(out, path);
}

void write_study_cells(const std::string& path, const McStudyResult& res) {
  std::ofstream out = open_out(path);
  out << (res.has_rho ? "replicate,k,mspe,rho_mspe" : "replicate,k,mspe")
      << '\n';
  for (const McCell& c : res.cells) {
    out << c.replicate << ',' << c.k << ',' << format_double(c.mspe);
    if (res.has_rho) out << ',' << format_double(c.rho_mspe);
    out << '\n';
  }
  finish_out(out, path);
}

void write_study_spe(const std::string& path, const McStudyResult& res) {
  std::ofstream out = open_out(path);
  out << (res.has_rho ? "replicate,k,grid_index,observed,spe,rho_spe"
                      : "replicate,k,grid_index,observed,spe")
      << '\n';
  for (const McCell& c : res.cells) {
    const std::vector<int>& sub =
        res.subsamples[static_cast<size_t>(c.replicate)];
    for (size_t t = 0; t < c.spe.size(); ++t) {
      bool obs = std::binary_search(sub.begin(), sub.end(), static_cast<int>(t));
      out << c.replicate << ',' << c.k << ',' << t << ',' << (obs ? 1 : 0)
          << ',' << format_double(c.spe[t]);
      if (res.has_rho) out << ',' << format_double(c.rho_spe[t]);
      out << '\n';
    }
  }
  finish_out(out, path);
}

}  // namespace rddmk::io
