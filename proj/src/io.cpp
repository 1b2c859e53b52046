#include "blmc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace blmc {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw IoError(path + ": empty file (header required)");
  return rows;
}

double parse_cell(const std::string& s, const std::string& path) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoError(path + ": cannot parse number '" + s + "'");
  }
  return v;
}

struct Table {
  std::vector<std::string> ids;
  Matrix values;
};

// id-keyed numeric table with a mandatory header.
Table read_id_table(const std::string& path, const std::string& what) {
  auto rows = read_csv(path);
  const auto& header = rows[0];
  if (header.empty() || header[0] != "id") {
    throw IoError(path + ": first " + what + " column must be 'id'");
  }
  const int cols = static_cast<int>(header.size()) - 1;
  if (cols < 1) throw IoError(path + ": no data columns");
  Table t;
  t.values.resize(static_cast<long>(rows.size()) - 1, cols);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (static_cast<int>(rows[r].size()) != cols + 1) {
      throw IoError(path + ": row " + std::to_string(r) + " has wrong column count");
    }
    t.ids.push_back(rows[r][0]);
    for (int c = 0; c < cols; ++c) {
      t.values(static_cast<long>(r) - 1, c) = parse_cell(rows[r][static_cast<std::size_t>(c) + 1], path);
    }
  }
  return t;
}

}  // namespace

void write_matrix_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& m, const std::vector<std::string>* row_ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (long r = 0; r < m.rows(); ++r) {
    if (row_ids) out << (*row_ids)[static_cast<std::size_t>(r)] << ',';
    for (long c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      if (std::isnan(m(r, c))) {
        // missing: empty cell
      } else {
        out << format_double(m(r, c));
      }
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::string& path, std::vector<std::string>* header,
                       std::vector<std::string>* row_ids) {
  auto rows = read_csv(path);
  bool with_ids = row_ids != nullptr;
  const int cols = static_cast<int>(rows[0].size()) - (with_ids ? 1 : 0);
  if (header) *header = rows[0];
  Matrix m(static_cast<long>(rows.size()) - 1, cols);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw IoError(path + ": row " + std::to_string(r) + " has wrong column count");
    }
    std::size_t off = 0;
    if (with_ids) {
      row_ids->push_back(rows[r][0]);
      off = 1;
    }
    for (int c = 0; c < cols; ++c) {
      m(static_cast<long>(r) - 1, c) = parse_cell(rows[r][off + static_cast<std::size_t>(c)], path);
    }
  }
  return m;
}

Dataset read_dataset(const DatasetPaths& paths) {
  Table locs = read_id_table(paths.locations, "locations");
  Table resp = read_id_table(paths.responses, "responses");
  Table covs = read_id_table(paths.covariates, "covariates");

  const auto n = locs.ids.size();
  if (resp.ids.size() != n || covs.ids.size() != n) {
    throw IoError("id row counts differ across locations/responses/covariates files");
  }
  std::map<std::string, int> where;
  for (std::size_t i = 0; i < n; ++i) {
    if (!where.emplace(locs.ids[i], static_cast<int>(i)).second) {
      throw IoError(paths.locations + ": duplicate id '" + locs.ids[i] + "'");
    }
  }
  auto align = [&](const Table& t, const std::string& path) {
    std::vector<int> to_loc_row(n);
    std::vector<bool> hit(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      auto it = where.find(t.ids[i]);
      if (it == where.end()) throw IoError(path + ": unknown id '" + t.ids[i] + "'");
      if (hit[static_cast<std::size_t>(it->second)]) {
        throw IoError(path + ": duplicate id '" + t.ids[i] + "'");
      }
      hit[static_cast<std::size_t>(it->second)] = true;
      to_loc_row[i] = it->second;
    }
    return to_loc_row;
  };
  std::vector<int> resp_row = align(resp, paths.responses);
  std::vector<int> cov_row = align(covs, paths.covariates);

  if (!locs.values.allFinite()) throw IoError(paths.locations + ": NaN coordinate");
  const int q = static_cast<int>(resp.values.cols());
  const int p = static_cast<int>(covs.values.cols());

  // Reorder everything to the location file's row order first, then to
  // model order.
  Matrix y_storage(static_cast<long>(n), q);
  Matrix x_storage(static_cast<long>(n), p);
  for (std::size_t i = 0; i < n; ++i) {
    y_storage.row(resp_row[i]) = resp.values.row(static_cast<long>(i));
    x_storage.row(cov_row[i]) = covs.values.row(static_cast<long>(i));
  }

  Dataset data;
  data.locs = make_location_set(locs.values);
  data.y.resize(static_cast<long>(n), q);
  data.x.resize(static_cast<long>(n), p);
  data.obs.assign(n * static_cast<std::size_t>(q), 0);
  data.ids.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    int model = data.locs.order[s];
    data.y.row(model) = y_storage.row(static_cast<long>(s));
    data.x.row(model) = x_storage.row(static_cast<long>(s));
    data.ids[static_cast<std::size_t>(model)] = locs.ids[s];
    for (int j = 0; j < q; ++j) {
      data.set_observed(model, j, std::isfinite(y_storage(static_cast<long>(s), j)));
    }
  }
  for (long i = 0; i < static_cast<long>(n); ++i) {
    bool any = false;
    for (int j = 0; j < q; ++j) any = any || data.observed(static_cast<int>(i), j);
    if (!any) {
      throw IoError(paths.responses + ": id '" + data.ids[static_cast<std::size_t>(i)] +
                    "' has no observed response");
    }
    if (!data.x.row(i).allFinite()) {
      throw IoError(paths.covariates + ": id '" + data.ids[static_cast<std::size_t>(i)] +
                    "' has missing covariates");
    }
  }
  data.finalize();
  return data;
}

void write_dataset(const Dataset& data, const DatasetPaths& paths) {
  const int n = data.n(), q = data.q(), p = data.p();
  const int d = data.locs.dim();
  // Restore original storage order.
  std::vector<int> storage_of(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) storage_of[static_cast<std::size_t>(data.locs.order[static_cast<std::size_t>(s)])] = s;

  std::vector<std::string> ids(static_cast<std::size_t>(n));
  Matrix coords(n, d), y(n, q), x(n, p);
  for (int model = 0; model < n; ++model) {
    int s = storage_of[static_cast<std::size_t>(model)];
    ids[static_cast<std::size_t>(s)] = data.ids[static_cast<std::size_t>(model)];
    coords.row(s) = data.locs.coords.row(model);
    x.row(s) = data.x.row(model);
    for (int j = 0; j < q; ++j) {
      y(s, j) = data.observed(model, j) ? data.y(model, j)
                                        : std::numeric_limits<double>::quiet_NaN();
    }
  }
  auto headers = [](const std::string& stem, int k) {
    std::vector<std::string> h{"id"};
    for (int i = 1; i <= k; ++i) h.push_back(stem + std::to_string(i));
    return h;
  };
  write_matrix_csv(paths.locations, headers("x", d), coords, &ids);
  write_matrix_csv(paths.responses, headers("y", q), y, &ids);
  write_matrix_csv(paths.covariates, headers("x", p), x, &ids);
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_signature(const PosteriorSamples& s) {
  std::ostringstream os;
  os << s.n << '|' << s.q << '|' << s.p << '|' << s.num_factors << '|'
     << s.config.num_neighbors << '|' << s.config.n_burn << '|' << s.config.n_keep << '|'
     << s.config.thin << '|' << (s.config.sigma_mode == SigmaMode::Full ? "full" : "diag")
     << '|' << s.config.seed << '|' << s.config.intercept_column << '|' << s.config.f_stride;
  return os.str();
}

void write_kv(std::ofstream& out, const std::string& k, const std::string& v) {
  out << k << "=" << v << "\n";
}

std::map<std::string, std::string> read_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string kv_get(const std::map<std::string, std::string>& kv, const std::string& key,
                   const std::string& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw IoError(path + ": missing key '" + key + "'");
  return it->second;
}

std::vector<std::string> indexed_header(const std::string& stem, int rows, int cols) {
  std::vector<std::string> h;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      h.push_back(stem + "_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
    }
  }
  return h;
}

Matrix stack_flat(const std::vector<Matrix>& draws) {
  if (draws.empty()) return {};
  const long rows = static_cast<long>(draws.size());
  const long cols = draws[0].size();
  Matrix m(rows, cols);
  for (long t = 0; t < rows; ++t) {
    const Matrix& d = draws[static_cast<std::size_t>(t)];
    for (long r = 0; r < d.rows(); ++r) {
      for (long c = 0; c < d.cols(); ++c) m(t, r * d.cols() + c) = d(r, c);
    }
  }
  return m;
}

}  // namespace

void write_samples(const PosteriorSamples& s, const std::string& dir) {
  fs::create_directories(dir);
  auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };

  {
    std::ofstream m(at("manifest.txt"));
    if (!m) throw IoError("cannot write manifest in " + dir);
    write_kv(m, "n", std::to_string(s.n));
    write_kv(m, "q", std::to_string(s.q));
    write_kv(m, "p", std::to_string(s.p));
    write_kv(m, "k", std::to_string(s.num_factors));
    write_kv(m, "m", std::to_string(s.config.num_neighbors));
    write_kv(m, "burnin", std::to_string(s.config.n_burn));
    write_kv(m, "n_keep", std::to_string(s.config.n_keep));
    write_kv(m, "thin", std::to_string(s.config.thin));
    write_kv(m, "sigma_mode", s.config.sigma_mode == SigmaMode::Full ? "full" : "diag");
    write_kv(m, "seed", std::to_string(s.config.seed));
    write_kv(m, "intercept_column", std::to_string(s.config.intercept_column));
    write_kv(m, "f_stride", std::to_string(s.config.f_stride));
    write_kv(m, "n_draws", std::to_string(s.n_draws()));
    write_kv(m, "n_f_draws", std::to_string(s.f_draws.size()));
    write_kv(m, "n_missing", std::to_string(s.missing_cells.size()));
    write_kv(m, "config_hash", std::to_string(fnv1a(config_signature(s))));
  }

  {
    std::vector<std::string> h{"id"};
    for (int d = 0; d < s.ref_coords.cols(); ++d) h.push_back("x" + std::to_string(d + 1));
    write_matrix_csv(at("ref_locations.csv"), h, s.ref_coords, &s.ids);
  }
  write_matrix_csv(at("beta.csv"), indexed_header("beta", s.p, s.q), stack_flat(s.beta));
  write_matrix_csv(at("lambda.csv"), indexed_header("lambda", s.num_factors, s.q),
                   stack_flat(s.lambda));
  write_matrix_csv(at("sigma.csv"), indexed_header("sigma", s.q, s.q), stack_flat(s.sigma));
  {
    Matrix psi(static_cast<long>(s.psi.size()), s.num_factors);
    for (std::size_t t = 0; t < s.psi.size(); ++t) psi.row(static_cast<long>(t)) = s.psi[t].transpose();
    std::vector<std::string> h;
    for (int k = 0; k < s.num_factors; ++k) h.push_back("psi_" + std::to_string(k + 1));
    write_matrix_csv(at("psi.csv"), h, psi);
    std::vector<std::string> ha;
    for (int k = 0; k < s.num_factors; ++k) ha.push_back("accept_" + std::to_string(k + 1));
    write_matrix_csv(at("accept.csv"), ha, s.accept_rate.transpose());
  }
  if (!s.missing_cells.empty()) {
    std::vector<std::string> h;
    for (const auto& [loc, resp] : s.missing_cells) {
      h.push_back("m_" + std::to_string(loc + 1) + "_" + std::to_string(resp + 1));
    }
    Matrix imp(static_cast<long>(s.imputed.size()), static_cast<long>(s.missing_cells.size()));
    for (std::size_t t = 0; t < s.imputed.size(); ++t) imp.row(static_cast<long>(t)) = s.imputed[t].transpose();
    write_matrix_csv(at("imputed.csv"), h, imp);
  }
  {
    // F draws: first column is the kept-draw index.
    std::vector<std::string> h{"draw"};
    for (int k = 0; k < s.num_factors; ++k) {
      for (int i = 0; i < s.n; ++i) {
        h.push_back("f_" + std::to_string(k + 1) + "_" + std::to_string(i + 1));
      }
    }
    Matrix f(static_cast<long>(s.f_draws.size()), 1 + static_cast<long>(s.n) * s.num_factors);
    for (std::size_t t = 0; t < s.f_draws.size(); ++t) {
      f(static_cast<long>(t), 0) = s.f_draws[t].first;
      const Matrix& d = s.f_draws[t].second;
      for (int k = 0; k < s.num_factors; ++k) {
        for (int i = 0; i < s.n; ++i) {
          f(static_cast<long>(t), 1 + static_cast<long>(k) * s.n + i) = d(i, k);
        }
      }
    }
    write_matrix_csv(at("f_draws.csv"), h, f);
  }
  {
    std::vector<std::string> h{"id"};
    for (int j = 0; j < s.q; ++j) h.push_back("omega" + std::to_string(j + 1));
    write_matrix_csv(at("omega_mean.csv"), h, s.omega_mean, &s.ids);
    write_matrix_csv(at("omega_var.csv"), h, s.omega_var(), &s.ids);
  }
  write_matrix_csv(at("omega_cov.csv"), indexed_header("omega_cov", s.q, s.q),
                   [&] {
                     Matrix flat(1, static_cast<long>(s.q) * s.q);
                     for (int r = 0; r < s.q; ++r)
                       for (int c = 0; c < s.q; ++c)
                         flat(0, static_cast<long>(r) * s.q + c) = s.omega_cov_mean(r, c);
                     return flat;
                   }());
}

PosteriorSamples read_samples(const std::string& dir, bool force) {
  auto at = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
  const std::string mpath = at("manifest.txt");
  auto kv = read_kv(mpath);

  PosteriorSamples s;
  s.n = std::stoi(kv_get(kv, "n", mpath));
  s.q = std::stoi(kv_get(kv, "q", mpath));
  s.p = std::stoi(kv_get(kv, "p", mpath));
  s.num_factors = std::stoi(kv_get(kv, "k", mpath));
  s.config.num_factors = s.num_factors;
  s.config.num_neighbors = std::stoi(kv_get(kv, "m", mpath));
  s.config.n_burn = std::stoi(kv_get(kv, "burnin", mpath));
  s.config.n_keep = std::stoi(kv_get(kv, "n_keep", mpath));
  s.config.thin = std::stoi(kv_get(kv, "thin", mpath));
  s.config.sigma_mode =
      kv_get(kv, "sigma_mode", mpath) == "full" ? SigmaMode::Full : SigmaMode::Diagonal;
  s.config.seed = std::stoull(kv_get(kv, "seed", mpath));
  s.config.intercept_column = std::stoi(kv_get(kv, "intercept_column", mpath));
  s.config.f_stride = std::stoi(kv_get(kv, "f_stride", mpath));
  const int n_draws = std::stoi(kv_get(kv, "n_draws", mpath));
  const int n_f_draws = std::stoi(kv_get(kv, "n_f_draws", mpath));
  const int n_missing = std::stoi(kv_get(kv, "n_missing", mpath));
  const std::uint64_t declared_hash = std::stoull(kv_get(kv, "config_hash", mpath));

  s.ref_coords = read_matrix_csv(at("ref_locations.csv"), nullptr, &s.ids);
  if (s.ref_coords.rows() != s.n) {
    throw IoError("ref_locations.csv: row count disagrees with manifest n");
  }

  auto load_block = [&](const std::string& file, int rows_expected, long flat_cols,
                        int r, int c) {
    Matrix m = read_matrix_csv(at(file));
    if (m.rows() != rows_expected || m.cols() != flat_cols) {
      throw IoError(file + ": dimensions disagree with manifest");
    }
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(rows_expected));
    for (long t = 0; t < m.rows(); ++t) {
      Matrix d(r, c);
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) d(i, j) = m(t, static_cast<long>(i) * c + j);
      }
      out.push_back(std::move(d));
    }
    return out;
  };
  s.beta = load_block("beta.csv", n_draws, static_cast<long>(s.p) * s.q, s.p, s.q);
  s.lambda = load_block("lambda.csv", n_draws, static_cast<long>(s.num_factors) * s.q,
                        s.num_factors, s.q);
  s.sigma = load_block("sigma.csv", n_draws, static_cast<long>(s.q) * s.q, s.q, s.q);
  {
    Matrix psi = read_matrix_csv(at("psi.csv"));
    if (psi.rows() != n_draws || psi.cols() != s.num_factors) {
      throw IoError("psi.csv: dimensions disagree with manifest");
    }
    for (long t = 0; t < psi.rows(); ++t) s.psi.push_back(psi.row(t).transpose());
    Matrix acc = read_matrix_csv(at("accept.csv"));
    if (acc.cols() != s.num_factors) throw IoError("accept.csv: wrong column count");
    s.accept_rate = acc.row(0).transpose();
  }
  if (n_missing > 0) {
    std::vector<std::string> header;
    Matrix imp = read_matrix_csv(at("imputed.csv"), &header);
    if (imp.rows() != n_draws || imp.cols() != n_missing) {
      throw IoError("imputed.csv: dimensions disagree with manifest");
    }
    for (const auto& name : header) {
      auto p1 = name.find('_');
      auto p2 = name.find('_', p1 + 1);
      if (p1 == std::string::npos || p2 == std::string::npos) {
        throw IoError("imputed.csv: malformed header '" + name + "'");
      }
      s.missing_cells.emplace_back(std::stoi(name.substr(p1 + 1, p2 - p1 - 1)) - 1,
                                   std::stoi(name.substr(p2 + 1)) - 1);
    }
    for (long t = 0; t < imp.rows(); ++t) s.imputed.push_back(imp.row(t).transpose());
  }
  {
    Matrix f = read_matrix_csv(at("f_draws.csv"));
    if (f.rows() != n_f_draws || f.cols() != 1 + static_cast<long>(s.n) * s.num_factors) {
      throw IoError("f_draws.csv: dimensions disagree with manifest");
    }
    for (long t = 0; t < f.rows(); ++t) {
      Matrix d(s.n, s.num_factors);
      for (int k = 0; k < s.num_factors; ++k) {
        for (int i = 0; i < s.n; ++i) d(i, k) = f(t, 1 + static_cast<long>(k) * s.n + i);
      }
      s.f_draws.emplace_back(static_cast<int>(f(t, 0)), std::move(d));
    }
  }
  {
    std::vector<std::string> ids_scratch;
    s.omega_mean = read_matrix_csv(at("omega_mean.csv"), nullptr, &ids_scratch);
  }
  if (s.omega_mean.rows() != s.n || s.omega_mean.cols() != s.q) {
    throw IoError("omega_mean.csv: dimensions disagree with manifest");
  }
  {
    std::vector<std::string> ids2;
    Matrix v = read_matrix_csv(at("omega_var.csv"), nullptr, &ids2);
    if (v.rows() != s.n || v.cols() != s.q) {
      throw IoError("omega_var.csv: dimensions disagree with manifest");
    }
    s.omega_count = 2;  // moments are summaries on read-back
    s.omega_m2 = v * static_cast<double>(s.omega_count - 1);
    Matrix cov = read_matrix_csv(at("omega_cov.csv"));
    if (cov.cols() != static_cast<long>(s.q) * s.q) {
      throw IoError("omega_cov.csv: wrong column count");
    }
    s.omega_cov_mean.resize(s.q, s.q);
    for (int r = 0; r < s.q; ++r) {
      for (int c = 0; c < s.q; ++c) s.omega_cov_mean(r, c) = cov(0, static_cast<long>(r) * s.q + c);
    }
  }
  if (fnv1a(config_signature(s)) != declared_hash && !force) {
    throw IoError("manifest.txt: config hash mismatch (files edited or mixed?)");
  }
  return s;
}

void write_report(const ScoreReport& rep, const std::string& path_base) {
  const int q = static_cast<int>(rep.rmspe.size()) - 1;
  {
    std::ofstream out(path_base + ".csv");
    if (!out) throw IoError("cannot write " + path_base + ".csv");
    out << "metric";
    for (int j = 1; j <= q; ++j) out << ",response" << j;
    out << ",pooled\n";
    auto row = [&](const char* name, const std::vector<double>& v) {
      if (v.empty()) return;
      out << name;
      for (double x : v) out << ',' << format_double(x);
      out << '\n';
    };
    row("rmspe", rep.rmspe);
    row("crps", rep.crps);
    row("int", rep.interval);
    row("cvg", rep.cvg);
    row("msel", rep.msel);
    row("crpsl", rep.crpsl);
    row("intl", rep.intl);
    row("cvgl", rep.cvgl);
  }
  {
    std::ofstream out(path_base + ".txt");
    if (!out) throw IoError("cannot write " + path_base + ".txt");
    out << "prediction scores at " << 100.0 * rep.level << "% intervals\n";
    out << "(crps columns are negated: larger is better; rmspe/int lower is better)\n";
    auto row = [&](const char* name, const std::vector<double>& v) {
      if (v.empty()) return;
      out << name << ":";
      for (std::size_t i = 0; i < v.size(); ++i) {
        out << ' ' << (i + 1 == v.size() ? "pooled=" : "r" + std::to_string(i + 1) + "=");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v[i]);
        out << buf;
      }
      out << '\n';
    };
    row("rmspe", rep.rmspe);
    row("crps", rep.crps);
    row("int", rep.interval);
    row("cvg", rep.cvg);
    row("msel", rep.msel);
    row("crpsl", rep.crpsl);
    row("intl", rep.intl);
    row("cvgl", rep.cvgl);
  }
}

namespace {

Matrix parse_matrix_value(const std::string& v, const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(v);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> vals;
    std::stringstream rs(row);
    std::string cell;
    while (std::getline(rs, cell, ',')) vals.push_back(parse_cell(cell, path));
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw IoError(path + ": empty matrix value");
  Matrix m(static_cast<long>(rows.size()), static_cast<long>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw IoError(path + ": ragged matrix value");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
  }
  return m;
}

std::string matrix_value(const Matrix& m) {
  std::string out;
  for (long r = 0; r < m.rows(); ++r) {
    if (r) out += ';';
    for (long c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
  }
  return out;
}

}  // namespace

GenerativeSpec read_generative_spec(const std::string& path) {
  auto kv = read_kv(path);
  GenerativeSpec spec;
  spec.n = std::stoi(kv_get(kv, "n", path));
  spec.q = std::stoi(kv_get(kv, "q", path));
  spec.p = std::stoi(kv_get(kv, "p", path));
  spec.num_factors = std::stoi(kv_get(kv, "k", path));
  spec.beta = parse_matrix_value(kv_get(kv, "beta", path), path);
  spec.lambda = parse_matrix_value(kv_get(kv, "lambda", path), path);
  Matrix sig = parse_matrix_value(kv_get(kv, "sigma", path), path);
  if (sig.rows() == 1) {
    spec.sigma = Matrix::Zero(sig.cols(), sig.cols());
    for (long j = 0; j < sig.cols(); ++j) spec.sigma(j, j) = sig(0, j);
  } else {
    spec.sigma = sig;
  }
  Matrix dec = parse_matrix_value(kv_get(kv, "decay", path), path);
  spec.decay = dec.row(0).transpose();
  if (kv.count("holdout")) spec.n_holdout = std::stoi(kv["holdout"]);
  if (kv.count("domain_lo")) spec.domain_lo = std::stod(kv["domain_lo"]);
  if (kv.count("domain_hi")) spec.domain_hi = std::stod(kv["domain_hi"]);
  if (kv.count("allow_nngp_generation")) {
    spec.allow_nngp_generation = kv["allow_nngp_generation"] == "1";
  }
  if (kv.count("misalign_fraction")) {
    Matrix fr = parse_matrix_value(kv["misalign_fraction"], path);
    spec.misalign.kind = MisalignmentRule::Kind::RandomFraction;
    if (fr.size() == 1) {
      spec.misalign.fraction = Vector::Constant(spec.q, fr(0, 0));
    } else {
      spec.misalign.fraction = fr.row(0).transpose();
    }
  }
  spec.check();
  return spec;
}

void write_generative_spec(const GenerativeSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_kv(out, "n", std::to_string(spec.n));
  write_kv(out, "q", std::to_string(spec.q));
  write_kv(out, "p", std::to_string(spec.p));
  write_kv(out, "k", std::to_string(spec.num_factors));
  write_kv(out, "beta", matrix_value(spec.beta));
  write_kv(out, "lambda", matrix_value(spec.lambda));
  write_kv(out, "sigma", matrix_value(spec.sigma));
  write_kv(out, "decay", matrix_value(spec.decay.transpose()));
  write_kv(out, "holdout", std::to_string(spec.n_holdout));
  write_kv(out, "domain_lo", format_double(spec.domain_lo));
  write_kv(out, "domain_hi", format_double(spec.domain_hi));
  write_kv(out, "allow_nngp_generation", spec.allow_nngp_generation ? "1" : "0");
  if (spec.misalign.kind == MisalignmentRule::Kind::RandomFraction) {
    write_kv(out, "misalign_fraction", matrix_value(spec.misalign.fraction.transpose()));
  }
}

}  // namespace blmc
