#include "spdcsim/tomography.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace spdcsim::tomography {

using measurement::Jones;
using Complex = std::complex<double>;

Jones analyzer_from_label(const std::string& label) {
  if (label == "H") return measurement::analyzer_h();
  if (label == "V") return measurement::analyzer_v();
  if (label == "D") return measurement::analyzer_d();
  if (label == "A") return measurement::linear_analyzer(-45.0);
  if (label == "R") return measurement::analyzer_r();
  if (label == "L") return Jones(1.0 / std::numbers::sqrt2, Complex(0.0, 1.0 / std::numbers::sqrt2));
  std::size_t used = 0;
  double angle = 0.0;
  try {
    angle = std::stod(label, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != label.size()) {
    throw std::invalid_argument("unknown analyzer label '" + label + "'");
  }
  return measurement::linear_analyzer(angle);
}

ProjectorSetting TomographyEntry::setting() const {
  return {analyzer_from_label(label_a), analyzer_from_label(label_b)};
}

void TomographyRecord::validate() const {
  if (entries.size() != 16) {
    throw std::invalid_argument("tomography record needs exactly 16 settings, got " +
                                std::to_string(entries.size()));
  }
  for (const auto& e : entries) {
    if (!(e.seconds > 0.0) || !std::isfinite(e.seconds)) {
      throw std::invalid_argument("integration time must be positive");
    }
    (void)e.setting();
  }
}

std::uint64_t TomographyRecord::total_counts() const {
  std::uint64_t n = 0;
  for (const auto& e : entries) n += e.counts;
  return n;
}

std::string TomographyRecord::to_csv() const {
  std::ostringstream out;
  out.precision(12);
  out << "setting_a,setting_b,seconds,counts\n";
  for (const auto& e : entries) {
    out << e.label_a << ',' << e.label_b << ',' << e.seconds << ',' << e.counts << '\n';
  }
  return out.str();
}

TomographyRecord TomographyRecord::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty tomography CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "setting_a,setting_b,seconds,counts") {
    throw std::invalid_argument("unexpected tomography CSV header: " + line);
  }
  TomographyRecord rec;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (fields.size() != 4) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 4 fields");
    }
    try {
      TomographyEntry e{fields[0], fields[1], std::stod(fields[2]), std::stoull(fields[3])};
      rec.entries.push_back(e);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": malformed number");
    }
  }
  rec.validate();
  return rec;
}

TomographyRecord canonical_settings() {
  static const char* const kLabels[] = {"H", "V", "D", "R"};
  TomographyRecord rec;
  for (const char* a : kLabels) {
    for (const char* b : kLabels) rec.entries.push_back({a, b, 1.0, 0});
  }
  return rec;
}

TomographyRecord tomo_expected_counts(const TwoPhotonState& state, double n_per_setting) {
  if (!(n_per_setting > 0.0)) throw std::domain_error("n_per_setting must be positive");
  TomographyRecord rec = canonical_settings();
  for (auto& e : rec.entries) {
    const double mean = n_per_setting * e.seconds * measurement::coincidence_prob(state, e.setting());
    e.counts = static_cast<std::uint64_t>(std::llround(std::max(0.0, mean)));
  }
  return rec;
}

TomographyRecord tomo_simulate_counts(const TwoPhotonState& state, double n_per_setting,
                                      std::uint64_t seed) {
  if (!(n_per_setting > 0.0)) throw std::domain_error("n_per_setting must be positive");
  std::mt19937_64 rng(seed);
  TomographyRecord rec = canonical_settings();
  for (auto& e : rec.entries) {
    const double mean = n_per_setting * e.seconds * measurement::coincidence_prob(state, e.setting());
    if (mean <= 0.0) continue;
    std::poisson_distribution<std::int64_t> draw(mean);
    e.counts = static_cast<std::uint64_t>(draw(rng));
  }
  return rec;
}

namespace {

std::array<Eigen::Matrix2cd, 4> paulis() {
  std::array<Eigen::Matrix2cd, 4> s;
  s[0] << 1, 0, 0, 1;
  s[1] << 0, 1, 1, 0;
  s[2] << 0, Complex(0, -1), Complex(0, 1), 0;
  s[3] << 1, 0, 0, -1;
  return s;
}

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

struct Prepared {
  std::vector<StateVector> kets;
  std::vector<double> seconds;
  std::vector<double> counts;
  double total = 0.0;
};

Prepared prepare(const TomographyRecord& rec) {
  rec.validate();
  Prepared p;
  for (const auto& e : rec.entries) {
    p.kets.push_back(e.setting().ket());
    p.seconds.push_back(e.seconds);
    p.counts.push_back(static_cast<double>(e.counts));
    p.total += static_cast<double>(e.counts);
  }
  if (!(p.total > 0.0)) throw std::invalid_argument("tomography record has no counts");

  const auto s = paulis();
  Eigen::Matrix<double, 16, 16> design;
  for (int j = 0; j < 16; ++j) {
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) {
        design(j, 4 * k + l) = (p.kets[static_cast<std::size_t>(j)].adjoint() * kron(s[k], s[l]) *
                                p.kets[static_cast<std::size_t>(j)])(0).real();
      }
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 16, 16>> lu(design);
  lu.setThreshold(1e-10);
  if (lu.rank() < 16) throw NotInformationallyComplete();
  return p;
}

// Parameter layout: T(a,a) real for a = 0..3, then Re/Im of T(a,b), a > b.
constexpr std::array<std::pair<int, int>, 6> kOffDiagonal = {{{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};
using Params = Eigen::Matrix<double, 16, 1>;

Eigen::Matrix4cd unpack(const Params& t) {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 4; ++a) m(a, a) = t(a);
  for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
    const auto [a, b] = kOffDiagonal[k];
    m(a, b) = Complex(t(4 + 2 * static_cast<int>(k)), t(5 + 2 * static_cast<int>(k)));
  }
  return m;
}

Params pack(const Eigen::Matrix4cd& m) {
  Params t;
  for (int a = 0; a < 4; ++a) t(a) = m(a, a).real();
  for (std::size_t k = 0; k < kOffDiagonal.size(); ++k) {
    const auto [a, b] = kOffDiagonal[k];
    t(4 + 2 * static_cast<int>(k)) = m(a, b).real();
    t(5 + 2 * static_cast<int>(k)) = m(a, b).imag();
  }
  return t;
}

// Per-count Poisson log-likelihood with the overall rate profiled out.
// Returns -inf where a measured setting has zero probability.
double log_likelihood(const Prepared& p, const Params& t, Params* grad) {
  const Eigen::Matrix4cd tri = unpack(t);
  std::array<double, 16> prob{};
  double norm = 0.0;
  for (std::size_t j = 0; j < 16; ++j) {
    prob[j] = (tri * p.kets[j]).squaredNorm();
    norm += p.seconds[j] * prob[j];
  }
  if (!(norm > 0.0)) return -std::numeric_limits<double>::infinity();

  double f = -p.total * std::log(norm);
  for (std::size_t j = 0; j < 16; ++j) {
    if (p.counts[j] == 0.0) continue;
    if (!(prob[j] > 0.0)) return -std::numeric_limits<double>::infinity();
    f += p.counts[j] * std::log(p.seconds[j] * prob[j]);
  }
  f /= p.total;

  if (grad) {
    Eigen::Matrix4cd g = Eigen::Matrix4cd::Zero();
    for (std::size_t j = 0; j < 16; ++j) {
      const double w = (p.counts[j] > 0.0 ? p.counts[j] / prob[j] : 0.0) - p.total * p.seconds[j] / norm;
      g += w * (p.kets[j] * p.kets[j].adjoint());
    }
    g /= p.total;
    const Eigen::Matrix4cd k = g * tri.adjoint();
    for (int a = 0; a < 4; ++a) (*grad)(a) = 2.0 * k(a, a).real();
    for (std::size_t m = 0; m < kOffDiagonal.size(); ++m) {
      const auto [a, b] = kOffDiagonal[m];
      (*grad)(4 + 2 * static_cast<int>(m)) = 2.0 * k(b, a).real();
      (*grad)(5 + 2 * static_cast<int>(m)) = -2.0 * k(b, a).imag();
    }
  }
  return f;
}

Params initial_guess(const DensityMatrix& linear) {
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(linear);
  const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  DensityMatrix rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  const double tr = rho.trace().real();
  rho = tr > 0.0 ? (rho / tr).eval() : DensityMatrix(DensityMatrix::Identity() / 4.0);
  rho = 0.99 * rho + 0.01 * DensityMatrix::Identity() / 4.0;
  rho = 0.5 * (rho + rho.adjoint()).eval();

  // rho = T^dagger T with T lower triangular: factor the index-reversed matrix.
  Eigen::Matrix4cd rev = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 4; ++i) rev(i, 3 - i) = 1.0;
  const Eigen::Matrix4cd l = Eigen::LLT<Eigen::Matrix4cd>(rev * rho * rev).matrixL();
  const Eigen::Matrix4cd tri = rev * l.adjoint() * rev;
  Params t = pack(tri);
  return t / t.norm();
}

DensityMatrix to_density(const Params& t) {
  const Eigen::Matrix4cd tri = unpack(t);
  DensityMatrix m = tri.adjoint() * tri;
  m /= m.trace().real();
  return 0.5 * (m + m.adjoint());
}

}  // namespace

DensityMatrix tomo_linear(const TomographyRecord& rec) {
  const Prepared p = prepare(rec);
  const auto s = paulis();
  Eigen::Matrix<double, 16, 16> design;
  Eigen::Matrix<double, 16, 1> rate;
  for (int j = 0; j < 16; ++j) {
    const auto& ket = p.kets[static_cast<std::size_t>(j)];
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) design(j, 4 * k + l) = 0.25 * (ket.adjoint() * kron(s[k], s[l]) * ket)(0).real();
    rate(j) = p.counts[static_cast<std::size_t>(j)] / p.seconds[static_cast<std::size_t>(j)];
  }
  const Eigen::Matrix<double, 16, 1> r = design.fullPivLu().solve(rate);
  DensityMatrix x = DensityMatrix::Zero();
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) x += 0.25 * r(4 * k + l) * kron(s[k], s[l]);
  const double tr = x.trace().real();
  if (!(tr > 0.0)) throw std::invalid_argument("linear inversion produced non-positive trace");
  x /= tr;
  return 0.5 * (x + x.adjoint());
}

MleResult tomo_mle_detailed(const TomographyRecord& rec, const MleOptions& options) {
  const Prepared p = prepare(rec);
  Params t = initial_guess(tomo_linear(rec));
  Params g;
  // BFGS on -f; the likelihood is invariant under t -> s t, so t is kept on
  // the unit sphere and the stopping rule uses |grad| * |t|.
  double f = log_likelihood(p, t, &g);
  Eigen::Matrix<double, 16, 16> h = Eigen::Matrix<double, 16, 16>::Identity();
  bool scaled = false;

  MleResult result;
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it;
    const double gnorm = g.norm() * t.norm();
    if (gnorm < options.gradient_tolerance) {
      result.rho = to_density(t);
      result.gradient_norm = gnorm;
      result.log_likelihood = f;
      return result;
    }

    Params dir = h * g;  // ascent direction
    if (dir.dot(g) <= 0.0) {
      h.setIdentity();
      dir = g;
    }
    double step = 1.0;
    Params t_new;
    Params g_new;
    double f_new = -std::numeric_limits<double>::infinity();
    const double slope = dir.dot(g);
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      t_new = t + step * dir;
      f_new = log_likelihood(p, t_new, &g_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * slope) break;
    }
    if (!(std::isfinite(f_new) && f_new >= f + 1e-4 * step * slope)) {
      if (h.isIdentity()) {
        // No ascent possible along the gradient: the objective is flat to
        // machine precision here.
        if (gnorm < 1e3 * options.gradient_tolerance) {
          result.rho = to_density(t);
          result.gradient_norm = gnorm;
          result.log_likelihood = f;
          return result;
        }
        std::ostringstream msg;
        msg << "line search failed at iteration " << it << ", |grad| = " << gnorm;
        throw MleNotConverged(msg.str());
      }
      h.setIdentity();
      continue;
    }

    const Params s = t_new - t;
    const Params y = g - g_new;  // gradient of -f changes by -(g_new - g)
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho_k = 1.0 / sy;
      const Eigen::Matrix<double, 16, 16> eye = Eigen::Matrix<double, 16, 16>::Identity();
      h = (eye - rho_k * s * y.transpose()) * h * (eye - rho_k * y * s.transpose()) + rho_k * s * s.transpose();
    }

    const double scale = t_new.norm();
    t = t_new / scale;
    g = g_new * scale;
    f = f_new;
  }
  std::ostringstream msg;
  msg << options.max_iterations << " iterations, |grad| = " << g.norm() * t.norm()
      << ", log-likelihood per count = " << f;
  throw MleNotConverged(msg.str());
}

TwoPhotonState tomo_mle(const TomographyRecord& rec, const MleOptions& options) {
  return TwoPhotonState(tomo_mle_detailed(rec, options).rho, 1e-10);
}

double fidelity(const TwoPhotonState& state, const StateVector& target) {
  const double n = target.norm();
  if (std::abs(n - 1.0) > 1e-9) throw std::invalid_argument("fidelity target must be normalized");
  return (target.adjoint() * state.rho() * target)(0).real();
}

double uhlmann_fidelity(const TwoPhotonState& rho, const TwoPhotonState& sigma) {
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho.rho());
  const Eigen::Vector4d root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const DensityMatrix sqrt_rho = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
  DensityMatrix inner = sqrt_rho * sigma.rho() * sqrt_rho;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es2(inner, Eigen::EigenvaluesOnly);
  const double tr = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::min(1.0, tr * tr);
}

BootstrapSummary bootstrap_errors(const TomographyRecord& rec, int resamples, const Statistic& statistic,
                                  std::uint64_t seed, unsigned threads) {
  if (resamples < 100) throw std::invalid_argument("bootstrap needs at least 100 resamples");
  rec.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(resamples));

  BootstrapSummary out;
  out.samples.assign(static_cast<std::size_t>(resamples), 0.0);
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&](unsigned w) {
    try {
      for (int r = static_cast<int>(w); r < resamples; r += static_cast<int>(threads)) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(r)};
        std::mt19937_64 rng(seq);
        TomographyRecord resampled = rec;
        for (auto& e : resampled.entries) {
          if (e.counts == 0) continue;
          std::poisson_distribution<std::int64_t> draw(static_cast<double>(e.counts));
          e.counts = static_cast<std::uint64_t>(draw(rng));
        }
        out.samples[static_cast<std::size_t>(r)] = statistic(tomo_mle(resampled));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker, w);
  worker(0);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  double sum = 0.0;
  for (double v : out.samples) sum += v;
  out.mean = sum / resamples;
  double ss = 0.0;
  for (double v : out.samples) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / (resamples - 1));
  return out;
}

}  // namespace spdcsim::tomography
