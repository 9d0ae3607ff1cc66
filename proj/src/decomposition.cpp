#include "plmm/decomposition.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace plmm {

Kinship compute_kinship(const StandardizedMatrix& Xstd) {
  const Index p_active = Xstd.n_active();
  if (p_active == 0) throw InputError("compute_kinship: no active columns");
  Matrix active(Xstd.values.rows(), p_active);
  for (Index j = 0, k = 0; j < Xstd.values.cols(); ++j) {
    if (Xstd.active[j]) active.col(k++) = Xstd.values.col(j);
  }
  Kinship out;
  out.K = Matrix::Zero(active.rows(), active.rows());
  out.K.selfadjointView<Eigen::Lower>().rankUpdate(active, 1.0 / static_cast<double>(p_active));
  out.K.triangularView<Eigen::StrictlyUpper>() = out.K.transpose();
  return out;
}

Spectrum eigendecompose(const Kinship& kinship) {
  const Matrix& K = kinship.K;
  if (K.rows() != K.cols()) throw InputError("eigendecompose: kinship matrix is not square");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(K);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecompose: symmetric eigensolver did not converge (n = " +
                         std::to_string(K.rows()) + ")");
  }
  // Eigen returns ascending order.
  Spectrum out;
  out.s = solver.eigenvalues().reverse();
  out.U = solver.eigenvectors().rowwise().reverse();
  for (Index i = 0; i < out.s.size(); ++i) {
    if (out.s[i] < 0) {
      if (out.s[i] <= -kEigenClamp) {
        std::ostringstream msg;
        msg << "eigendecompose: eigenvalue " << out.s[i] << " is negative; kinship is not PSD";
        throw NumericalError(msg.str());
      }
      out.s[i] = 0.0;
    }
  }
  return out;
}

Preconditioner build_preconditioner(const Spectrum& spectrum, double eta, double eta_max) {
  if (!(eta >= 0.0 && eta <= eta_max)) {
    throw InputError("build_preconditioner: eta = " + std::to_string(eta) + " outside [0, " +
                     std::to_string(eta_max) + "]");
  }
  Preconditioner pre;
  pre.U = spectrum.U;
  pre.eta = eta;
  pre.w = (eta * spectrum.s.array() + (1.0 - eta)).rsqrt();
  return pre;
}

Preconditioner restrict_rows(const Preconditioner& pre, std::span<const Index> rows) {
  Preconditioner out;
  out.U = select_rows(pre.U, rows);
  out.w = pre.w;
  out.eta = pre.eta;
  return out;
}

void save_spectrum(const Spectrum& spectrum, std::uint64_t data_hash, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "plmm-spectrum-v1";
  j["data_hash"] = data_hash;
  j["n"] = spectrum.n();
  j["s"] = json_io::to_json(spectrum.s);
  // U row-major, flattened
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(spectrum.U.size()));
  for (Index i = 0; i < spectrum.U.rows(); ++i) {
    for (Index k = 0; k < spectrum.U.cols(); ++k) u.push_back(spectrum.U(i, k));
  }
  j["U"] = u;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write spectrum cache " + path.string());
  out << j.dump();
}

Spectrum load_spectrum(const std::filesystem::path& path, std::uint64_t expected_hash) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open spectrum cache " + path.string());
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "plmm-spectrum-v1") throw InputError("not a spectrum cache: " + path.string());
  if (j.at("data_hash").get<std::uint64_t>() != expected_hash) {
    throw InputError("spectrum cache " + path.string() + " was built from different data (hash mismatch)");
  }
  const auto n = j.at("n").get<Index>();
  Spectrum s;
  s.s = json_io::vector_from_json(j.at("s"));
  const auto u = j.at("U").get<std::vector<double>>();
  if (s.s.size() != n || static_cast<Index>(u.size()) != n * n) {
    throw InputError("spectrum cache " + path.string() + " has inconsistent dimensions");
  }
  s.U = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(u.data(), n, n);
  return s;
}

}  // namespace plmm
