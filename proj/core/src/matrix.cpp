#include "sumo/matrix.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

namespace sumo {

bool is_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

void require_nonzero(const Matrix& a, const char* what) {
  if (a.size() == 0 || a.norm() == 0.0) {
    throw std::invalid_argument(std::string(what) + ": zero matrix");
  }
}

double GaussianStream::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller on uniforms in (0, 1].
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u1 = 0.0;
  do {
    u1 = unit(engine_);
  } while (u1 <= 0.0);
  const double u2 = unit(engine_);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

Matrix GaussianStream::matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = next();
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto split = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return split(split(base ^ split(a)) ^ split(b ^ 0x6a09e667f3bcc909ULL));
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void save_matrix(const Matrix& a, const std::filesystem::path& file) {
  require_finite(a, "save_matrix");
  nlohmann::json j;
  j["rows"] = a.rows();
  j["cols"] = a.cols();
  auto& data = j["data"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      data.push_back(a(i, k));
    }
  }
  std::ofstream out(file);
  if (!out) {
    throw std::runtime_error("save_matrix: cannot open " + file.string());
  }
  out << j.dump() << "\n";
}

Matrix load_matrix(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("load_matrix: cannot open " + file.string());
  }
  nlohmann::json j;
  in >> j;
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  // Zero-sized factors are legitimate (rank-0 adapters); negatives are not.
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("load_matrix: rows/cols must be non-negative");
  }
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("load_matrix: data length != rows*cols");
  }
  Matrix a(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      a(i, k) = data[idx++].get<double>();
    }
  }
  require_finite(a, "load_matrix");
  return a;
}

}  // namespace sumo
