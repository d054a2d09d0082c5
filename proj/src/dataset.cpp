#include "trsvr/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace trsvr {

void Dataset::validate() const {
  if (size() < 1 || dim() < 1) {
    throw std::invalid_argument("dataset must have at least one sample and one feature");
  }
  if (labels.size() != size()) {
    throw std::invalid_argument("label count does not match row count");
  }
  if (!rows.isCompressed()) {
    throw std::invalid_argument("dataset rows must be compressed");
  }
  for (Index i = 0; i < size(); ++i) {
    if (labels[i] != 1.0 && labels[i] != -1.0) {
      throw std::invalid_argument("labels must be +1 or -1");
    }
    Index prev = -1;
    for (SparseRows::InnerIterator it(rows, i); it; ++it) {
      if (it.index() <= prev) {
        throw std::invalid_argument("row indices must be strictly increasing");
      }
      if (it.value() == 0.0) {
        throw std::invalid_argument("explicit zero stored in dataset row");
      }
      if (!std::isfinite(it.value())) {
        throw std::invalid_argument("non-finite feature value");
      }
      prev = it.index();
    }
  }
}

double Dataset::row_squared_norm(Index i) const {
  double acc = 0.0;
  for (SparseRows::InnerIterator it(rows, i); it; ++it) acc += it.value() * it.value();
  return acc;
}

double Dataset::max_row_squared_norm() const {
  double best = 0.0;
  for (Index i = 0; i < size(); ++i) best = std::max(best, row_squared_norm(i));
  return best;
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.dim() != b.dim() || a.rows.nonZeros() != b.rows.nonZeros()) {
    return false;
  }
  if (a.labels != b.labels) return false;
  for (Index i = 0; i < a.size(); ++i) {
    SparseRows::InnerIterator ia(a.rows, i);
    SparseRows::InnerIterator ib(b.rows, i);
    for (; ia && ib; ++ia, ++ib) {
      if (ia.index() != ib.index() || ia.value() != ib.value()) return false;
    }
    if (ia || ib) return false;
  }
  return true;
}

Dataset make_dataset(Index dim, const std::vector<std::vector<SparseEntry>>& rows,
                     const std::vector<double>& labels) {
  if (rows.size() != labels.size()) {
    throw std::invalid_argument("label count does not match row count");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index prev = -1;
    for (const auto& [j, v] : rows[i]) {
      if (j < 0 || j >= dim) throw std::invalid_argument("feature index out of range");
      if (j <= prev) throw std::invalid_argument("row indices must be strictly increasing");
      prev = j;
      if (v != 0.0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
  }
  Dataset data;
  data.rows.resize(static_cast<Index>(rows.size()), dim);
  data.rows.setFromTriplets(triplets.begin(), triplets.end());
  data.rows.makeCompressed();
  data.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Index>(labels.size()));
  data.validate();
  return data;
}

Dataset make_dense_dataset(const Matrix& features, const Vector& labels) {
  std::vector<std::vector<SparseEntry>> rows(static_cast<std::size_t>(features.rows()));
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < features.cols(); ++j) {
      rows[static_cast<std::size_t>(i)].emplace_back(j, features(i, j));
    }
  }
  return make_dataset(features.cols(), rows,
                      std::vector<double>(labels.data(), labels.data() + labels.size()));
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

bool parse_double(std::string_view token, double& out) {
  // from_chars rejects a leading '+', which LIBSVM labels commonly carry.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, Index min_dim) {
  std::vector<std::vector<SparseEntry>> rows;
  std::vector<double> labels;
  Index dim = min_dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;

    double label = 0.0;
    if (!parse_double(token, label)) throw ParseError(lineno, "malformed label '" + token + "'");
    if (label == 0.0) {
      label = -1.0;
    } else if (label != 1.0 && label != -1.0) {
      throw ParseError(lineno, "label must be -1, 0 or +1");
    }

    std::vector<SparseEntry> row;
    Index prev = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == token.size()) {
        throw ParseError(lineno, "malformed feature '" + token + "'");
      }
      long long idx = 0;
      const char* first = token.data();
      auto [ptr, ec] = std::from_chars(first, first + colon, idx);
      if (ec != std::errc() || ptr != first + colon || idx < 1) {
        throw ParseError(lineno, "malformed feature index '" + token + "'");
      }
      double value = 0.0;
      if (!parse_double(std::string_view(token).substr(colon + 1), value) || !std::isfinite(value)) {
        throw ParseError(lineno, "malformed feature value '" + token + "'");
      }
      if (idx <= prev) throw ParseError(lineno, "feature indices must be strictly ascending");
      prev = static_cast<Index>(idx);
      dim = std::max(dim, prev);
      if (value != 0.0) row.emplace_back(prev - 1, value);
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  if (rows.empty()) throw ParseError(lineno, "no samples found");
  if (dim < 1) throw ParseError(lineno, "no features found");
  return make_dataset(dim, rows, labels);
}

Dataset parse_libsvm_string(const std::string& text, Index min_dim) {
  std::istringstream in(text);
  return parse_libsvm(in, min_dim);
}

Dataset load_libsvm(const std::string& path, Index min_dim) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return parse_libsvm(in, min_dim);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (Index i = 0; i < data.size(); ++i) {
    out << (data.labels[i] > 0 ? "+1" : "-1");
    for (SparseRows::InnerIterator it(data.rows, i); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      out << ' ' << (it.index() + 1) << ':' << buf;
    }
    out << '\n';
  }
}

std::string to_libsvm_string(const Dataset& data) {
  std::ostringstream out;
  write_libsvm(out, data);
  return out.str();
}

}  // namespace trsvr
