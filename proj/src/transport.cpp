#include "ccclab/transport.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ccclab {

namespace {

double lorentz(double s, double width) { return width / std::numbers::pi / (width * width + s * s); }

void require_open(const LatticeSpec& lattice, int axis, const char* what) {
    if (axis < 0 || axis >= lattice.dimension)
        throw std::out_of_range(fmt::format("{}: component {} out of range", what, axis + 1));
    if (lattice.periodic(axis))
        throw std::invalid_argument(fmt::format("{} needs an open axis {} (position operator)", what, axis + 1));
}

// Re(v_a,ij v_b,ji) / N
Eigen::MatrixXd pair_weights(const Realization& r, int alpha, int beta) {
    if (r.velocity_eigen.size() != static_cast<std::size_t>(r.dimension()))
        throw std::invalid_argument("realization carries no eigenbasis velocities");
    const auto& va = r.velocity_eigen.at(static_cast<std::size_t>(alpha));
    const auto& vb = r.velocity_eigen.at(static_cast<std::size_t>(beta));
    return va.cwiseProduct(vb.transpose()).real() / r.site_count();
}

// least squares y = c0 + c1 x; returns (c0, c1, rms residual)
std::array<double, 3> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    const double det = n * sxx - sx * sx;
    if (det <= 0.0) return {sy / n, 0.0, 0.0};
    const double slope = (n * sxy - sx * sy) / det;
    const double icpt = (sy - slope * sx) / n;
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) ss += std::pow(y[k] - icpt - slope * x[k], 2);
    return {icpt, slope, std::sqrt(ss / n)};
}

}  // namespace

std::string to_string(Abscissa a) {
    switch (a) {
        case Abscissa::frequency: return "frequency";
        case Abscissa::regulator: return "regulator";
        case Abscissa::fermi_energy: return "fermi_energy";
        case Abscissa::time: return "time";
    }
    return "unknown";
}

CurveAccumulator::CurveAccumulator(Abscissa kind, std::vector<double> abscissa, int alpha, int beta,
                                   double temperature)
    : stats_(abscissa.size()) {
    shape_.kind = kind;
    shape_.abscissa = std::move(abscissa);
    shape_.alpha = alpha;
    shape_.beta = beta;
    shape_.temperature = temperature;
}

void CurveAccumulator::add(const std::vector<double>& values) {
    if (values.size() != stats_.size()) throw std::invalid_argument("curve length mismatch");
    for (std::size_t k = 0; k < values.size(); ++k) stats_[k].add(values[k]);
}

void CurveAccumulator::merge(const CurveAccumulator& other) {
    if (other.stats_.size() != stats_.size()) throw std::invalid_argument("curve length mismatch");
    for (std::size_t k = 0; k < stats_.size(); ++k) stats_[k].merge(other.stats_[k]);
}

TransportCurve CurveAccumulator::result() const {
    TransportCurve c = shape_;
    for (const auto& s : stats_) {
        c.mean.push_back(s.mean);
        c.standard_error.push_back(s.standard_error());
    }
    c.realizations = stats_.empty() ? 0 : stats_.front().count;
    return c;
}

std::vector<double> ac_conductivity(const Realization& r, const std::vector<double>& nu, const KuboParameters& p) {
    if (!(p.regulator > 0.0)) throw std::invalid_argument("ac_conductivity needs a positive regulator");
    if (p.temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
    const Eigen::MatrixXd w = pair_weights(r, p.alpha, p.beta);
    const auto& e = r.eig.values;
    const double tol = r.eig.degeneracy_tolerance();
    const Eigen::Index n = r.size();

    Eigen::MatrixXd q(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) q(i, j) = fermi_quotient(e(i), e(j), p.e_fermi, p.temperature, tol);

    std::vector<double> out;
    out.reserve(nu.size());
    for (const double f : nu) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) {
                if (q(i, j) == 0.0 || w(i, j) == 0.0) continue;
                sum += q(i, j) * lorentz(e(i) - e(j) + f, p.regulator) * w(i, j);
            }
        out.push_back(-sum);
    }
    return out;
}

double ac_conductivity(const Realization& r, double nu, const KuboParameters& p) {
    return ac_conductivity(r, std::vector<double>{nu}, p).front();
}

double ac_conductivity_diagonal(const Realization& r, double nu, const KuboParameters& p) {
    if (nu == 0.0) return static_conductivity(r, p);
    const Eigen::MatrixXd w = pair_weights(r, p.alpha, p.beta);
    const auto& e = r.eig.values;
    const double tol = r.eig.degeneracy_tolerance();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < r.size(); ++j)
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (std::abs(e(i) - e(j)) > tol) continue;
            sum += fermi_quotient(e(i) + nu, e(i), p.e_fermi, p.temperature, 0.0) * w(i, j);
        }
    return -sum;
}

double static_conductivity(const Realization& r, const KuboParameters& p) {
    const Eigen::MatrixXd w = pair_weights(r, p.alpha, p.beta);
    const auto& e = r.eig.values;
    const double tol = r.eig.degeneracy_tolerance();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < r.size(); ++j)
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (std::abs(e(i) - e(j)) > tol) continue;
            sum += fermi_derivative(e(i), p.e_fermi, p.temperature) * w(i, j);
        }
    return -sum;
}

DcDensity dc_density(const WindowScan& scan) {
    if (scan.epsilons.empty()) throw std::invalid_argument("dc_density needs a non-empty scan");
    DcDensity out;
    const auto smallest = static_cast<std::size_t>(
        std::min_element(scan.epsilons.begin(), scan.epsilons.end()) - scan.epsilons.begin());
    out.estimate = scan.mean[smallest];
    out.standard_error = scan.standard_error[smallest];

    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < scan.epsilons.size(); ++k)
        if (scan.mean[k] > 0.0) {
            lx.push_back(std::log(scan.epsilons[k]));
            ly.push_back(std::log(scan.mean[k]));
        }
    out.fitted_rungs = static_cast<int>(lx.size());
    if (lx.size() >= 2) {
        out.growth_exponent = line_fit(lx, ly)[1];
        out.divergent = out.growth_exponent < -0.5;
    }
    return out;
}

double greens_conductivity(const Realization& r, double e_fermi, double eta, int alpha, int beta,
                           const TraceWindow& window) {
    if (!(eta > 0.0)) throw std::invalid_argument("greens_conductivity needs eta > 0");
    require_open(r.lattice, alpha, "greens_conductivity");
    require_open(r.lattice, beta, "greens_conductivity");
    if (!r.eig.has_vectors()) throw std::invalid_argument("greens_conductivity needs eigenvectors");

    const Complex z(e_fermi, eta);
    Eigen::VectorXcd resolvent(r.size());
    for (Eigen::Index m = 0; m < r.size(); ++m) resolvent(m) = 1.0 / (r.eig.values(m) - z);
    const auto& u = r.eig.vectors;
    const Eigen::VectorXd xa = site_coordinates(r.lattice, alpha);
    const Eigen::VectorXd xb = site_coordinates(r.lattice, beta);

    double sum = 0.0;
    for (const Eigen::Index o : window.sites()) {
        // row o of G = U diag(R) U^dag
        const Eigen::RowVectorXcd g = u.row(o).cwiseProduct(resolvent.transpose()) * u.adjoint();
        for (Eigen::Index x = 0; x < r.size(); ++x)
            sum += (xa(x) - xa(o)) * (xb(x) - xb(o)) * std::norm(g(x));
    }
    const double d = r.dimension();
    return 2.0 * eta * eta / (d * std::numbers::pi) * sum / static_cast<double>(window.size());
}

double greens_conductivity(const Realization& r, double e_fermi, double eta, int alpha, int beta) {
    return greens_conductivity(r, e_fermi, eta, alpha, beta, TraceWindow::full(r.lattice));
}

double lorentzian_ccc(const Realization& r, double e_fermi, double eta, int alpha, int beta) {
    if (!(eta > 0.0)) throw std::invalid_argument("lorentzian_ccc needs eta > 0");
    const Eigen::MatrixXd w = pair_weights(r, alpha, beta);
    Eigen::VectorXd delta(r.size());
    for (Eigen::Index m = 0; m < r.size(); ++m) delta(m) = lorentz(r.eig.values(m) - e_fermi, eta);
    return delta.dot(w * delta);
}

Complex liouvillian_conductivity(const Realization& r, const LiouvillianParameters& p) {
    if (p.eta < 0.0 || p.relaxation < 0.0) throw std::invalid_argument("regulators must be >= 0");
    const double gamma = p.eta + p.relaxation;
    if (!(gamma > 0.0)) throw std::invalid_argument("liouvillian_conductivity needs eta > 0 or a relaxation rate");
    if (r.velocity_eigen.size() != static_cast<std::size_t>(r.dimension()))
        throw std::invalid_argument("realization carries no eigenbasis velocities");
    const auto& va = r.velocity_eigen.at(static_cast<std::size_t>(p.alpha));
    const auto& vb = r.velocity_eigen.at(static_cast<std::size_t>(p.beta));
    const auto& e = r.eig.values;
    const double tol = r.eig.degeneracy_tolerance();

    Complex sum(0.0, 0.0);
    for (Eigen::Index n = 0; n < r.size(); ++n)
        for (Eigen::Index m = 0; m < r.size(); ++m) {
            const double q = fermi_quotient(e(n), e(m), p.e_fermi, p.temperature, tol);
            if (q == 0.0) continue;
            sum += q * va(m, n) * vb(n, m) / Complex(gamma, p.nu - (e(n) - e(m)));
        }
    return -sum / r.site_count();
}

Eigen::VectorXd streda_marker_map(const Operator& fermi_proj, const LatticeSpec& lattice) {
    if (lattice.dimension != 2) throw std::invalid_argument("the Streda marker needs a 2-d lattice");
    if (!lattice.all_open()) throw std::invalid_argument("the Streda marker needs open boundaries");
    const auto n = static_cast<Eigen::Index>(lattice.site_count());
    if (fermi_proj.rows() != n || fermi_proj.cols() != n)
        throw std::invalid_argument("projector and lattice dimensions differ");
    const Eigen::VectorXd x = site_coordinates(lattice, 0);
    const Eigen::VectorXd y = site_coordinates(lattice, 1);

    const Eigen::MatrixXcd px = fermi_proj * x.cast<Complex>().asDiagonal();
    const Eigen::MatrixXcd yp = y.cast<Complex>().asDiagonal() * fermi_proj;
    const Eigen::MatrixXcd qyp = yp - fermi_proj * yp;
    Eigen::VectorXd marker(n);
    for (Eigen::Index s = 0; s < n; ++s)
        marker(s) = 4.0 * std::numbers::pi * px.row(s).cwiseProduct(qyp.col(s).transpose()).sum().imag();
    return marker;
}

double streda_marker(const Operator& fermi_proj, const LatticeSpec& lattice, const TraceWindow& window) {
    const Eigen::VectorXd marker = streda_marker_map(fermi_proj, lattice);
    double sum = 0.0;
    for (const Eigen::Index s : window.sites()) sum += marker(s);
    return sum / static_cast<double>(window.size());
}

KernelProfile fermi_kernel_profile(const Operator& fermi_proj, const LatticeSpec& lattice,
                                   const TraceWindow& window) {
    if (!lattice.all_open()) throw std::invalid_argument("the Fermi kernel profile needs open boundaries");
    const auto n = static_cast<Eigen::Index>(lattice.site_count());
    if (fermi_proj.rows() != n || fermi_proj.cols() != n)
        throw std::invalid_argument("projector and lattice dimensions differ");

    int max_r = 0;
    for (int a = 0; a < lattice.dimension; ++a) max_r += lattice.side(a) - 1;
    std::vector<double> sums(static_cast<std::size_t>(max_r) + 1, 0.0);
    std::vector<std::size_t> pairs(sums.size(), 0);

    KernelProfile k;
    double moment = 0.0;
    for (const Eigen::Index o : window.sites()) {
        const auto co = lattice.coordinates(static_cast<std::size_t>(o));
        for (Eigen::Index x = 0; x < n; ++x) {
            const auto cx = lattice.coordinates(static_cast<std::size_t>(x));
            int dist = 0;
            double r2 = 0.0;
            for (std::size_t a = 0; a < static_cast<std::size_t>(lattice.dimension); ++a) {
                const int d = cx[a] - co[a];
                dist += std::abs(d);
                r2 += static_cast<double>(d) * d;
            }
            const double w = std::norm(fermi_proj(o, x));
            sums[static_cast<std::size_t>(dist)] += w;
            ++pairs[static_cast<std::size_t>(dist)];
            moment += r2 * w;
        }
    }
    for (std::size_t d = 0; d < sums.size(); ++d) {
        if (pairs[d] == 0) continue;
        k.distance.push_back(static_cast<int>(d));
        k.profile.push_back(sums[d] / static_cast<double>(pairs[d]));
        k.pairs.push_back(pairs[d]);
    }
    k.second_moment = moment / static_cast<double>(window.size());
    fit_kernel_decay(k);
    return k;
}

void fit_kernel_decay(KernelProfile& k) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < k.distance.size(); ++i)
        if (k.distance[i] >= 1 && k.profile[i] > 1e-14) {
            x.push_back(k.distance[i]);
            y.push_back(std::log(k.profile[i]));
        }
    k.fit_shells = static_cast<int>(x.size());
    k.fitted = x.size() >= 3;
    if (!k.fitted) {
        k.rate = k.amplitude = k.fit_residual = 0.0;
        return;
    }
    const auto [icpt, slope, rms] = line_fit(x, y);
    k.rate = -slope;
    k.amplitude = std::exp(icpt);
    k.fit_residual = rms;
}

double time_average(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.empty() || times.size() != values.size()) throw std::invalid_argument("time_average: bad series");
    if (times.size() == 1) return values.front();
    double area = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (times[k] < times[k - 1]) throw std::invalid_argument("time grid must be ascending");
        area += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
    }
    const double span = times.back() - times.front();
    return span > 0.0 ? area / span : values.front();
}

std::vector<double> response_current(const Realization& r, double e_fermi, double field,
                                     const std::vector<double>& times) {
    require_open(r.lattice, 0, "linear_response_current");
    const Eigen::VectorXd x = site_coordinates(r.lattice, 0);
    Operator h = r.hamiltonian;
    h.diagonal() += (field * x).cast<Complex>();
    const EigenSystem es = diagonalize(h);

    const Operator p = fermi_projector(r.eig, e_fermi);
    const Operator v = r.velocity(0);
    const Eigen::MatrixXcd vt = es.vectors.adjoint() * v * es.vectors;
    const Eigen::MatrixXcd pt = es.vectors.adjoint() * p * es.vectors;
    // W_nm = v~_nm p~_mn, J(t) = Re a^T W conj(a) / N with a_n = exp(i E~_n t)
    const Eigen::MatrixXcd w = vt.cwiseProduct(pt.transpose());

    std::vector<double> out;
    out.reserve(times.size());
    Eigen::VectorXcd a(es.size());
    for (const double t : times) {
        for (Eigen::Index k = 0; k < es.size(); ++k) a(k) = std::polar(1.0, es.values(k) * t);
        out.push_back((a.transpose() * w * a.conjugate()).value().real() / r.site_count());
    }
    return out;
}

LinearResponse linear_response_current(const Realization& r, double e_fermi, double field,
                                       const std::vector<double>& times) {
    LinearResponse out;
    out.times = times;
    out.field = field;
    out.current = response_current(r, e_fermi, field, times);
    if (field != 0.0) {
        out.sigma = time_average(times, out.current) / field;
        const auto half = response_current(r, e_fermi, 0.5 * field, times);
        out.sigma_half = time_average(times, half) / (0.5 * field);
        out.nonlinearity = std::abs(out.sigma - out.sigma_half);
    }
    const double bandwidth = r.size() > 0 ? r.eig.values(r.size() - 1) - r.eig.values(0) : 0.0;
    out.weak_field = std::abs(field) * r.lattice.side(0) <= 0.1 * bandwidth;
    return out;
}

}  // namespace ccclab
