#pragma once

#include "ccclab/ccc.hpp"
#include "ccclab/realization.hpp"
#include "ccclab/spectral.hpp"
#include "ccclab/stats.hpp"

#include <string>
#include <vector>

namespace ccclab {

enum class Abscissa { frequency, regulator, fermi_energy, time };
std::string to_string(Abscissa a);

/// Conductivity (units e^2/hbar per site) sampled on a grid, with ensemble errors.
struct TransportCurve {
    Abscissa kind = Abscissa::frequency;
    std::vector<double> abscissa;
    std::vector<double> mean;
    std::vector<double> standard_error;
    int alpha = 0;
    int beta = 0;
    double temperature = 0.0;
    std::size_t realizations = 0;
};

/// Streams per-realization curves into a TransportCurve.
class CurveAccumulator {
public:
    CurveAccumulator(Abscissa kind, std::vector<double> abscissa, int alpha, int beta, double temperature);
    void add(const std::vector<double>& values);
    void merge(const CurveAccumulator& other);
    TransportCurve result() const;

private:
    TransportCurve shape_;
    std::vector<RunningStats> stats_;
};

struct KuboParameters {
    double e_fermi = 0.0;
    double temperature = 0.0;
    double regulator = 0.1;  ///< width of the Lorentzian delta
    int alpha = 0;
    int beta = 0;
};

/// sigma(nu) = -sum_{ij} q_ij delta_eps(E_i - E_j + nu) Re(v_a,ij v_b,ji) / N,
/// q_ij the Fermi difference quotient. Signed so that sigma_aa >= 0.
double ac_conductivity(const Realization& r, double nu, const KuboParameters& p);
std::vector<double> ac_conductivity(const Realization& r, const std::vector<double>& nu, const KuboParameters& p);

/// Diagonal-measure form -sum_E [n_F(E+nu) - n_F(E)]/nu m(E,E), summed over
/// degenerate pairs (the atoms on the diagonal). The regulator is unused.
double ac_conductivity_diagonal(const Realization& r, double nu, const KuboParameters& p);

/// nu -> 0 limit of the above: -sum n_F'(E) over diagonal atoms.
double static_conductivity(const Realization& r, const KuboParameters& p);

/// DC density read off a diagonal scan.
struct DcDensity {
    double estimate = 0.0;        ///< value at the smallest rung
    double standard_error = 0.0;
    double growth_exponent = 0.0; ///< slope of log(value) against log(eps); -1 for a diagonal atom
    int fitted_rungs = 0;
    bool divergent = false;
};

/// Throws std::invalid_argument on an empty scan.
DcDensity dc_density(const WindowScan& scan);

/// (2 eta^2 / (d pi)) avg_{o in W} sum_x (x-o)_a (x-o)_b |G(o,x; E_F + i eta)|^2,
/// with G built from the eigendecomposition. Open axes only.
double greens_conductivity(const Realization& r, double e_fermi, double eta, int alpha, int beta,
                           const TraceWindow& window);
double greens_conductivity(const Realization& r, double e_fermi, double eta, int alpha, int beta);

/// (1/N) sum_{mn} delta_eta(E_m - E_F) delta_eta(E_n - E_F) Re(v_a,mn v_b,nm).
double lorentzian_ccc(const Realization& r, double e_fermi, double eta, int alpha, int beta);

/// Exact finite-volume ratio greens / lorentzian with a full window.
inline double greens_lorentzian_ratio(int dimension) { return 2.0 * 3.14159265358979323846 / dimension; }

struct LiouvillianParameters {
    double e_fermi = 0.0;
    double temperature = 0.0;
    double eta = 0.0;        ///< Abel regulator
    double relaxation = 0.0; ///< inverse relaxation time; adds to eta
    double nu = 0.0;
    int alpha = 0;
    int beta = 0;
};

/// -(1/N) sum_{mn} q_nm v_a,mn v_b,nm / (gamma + i(nu - (E_n - E_m))), gamma = eta + relaxation.
/// Re sigma_aa >= 0. Throws std::invalid_argument if gamma <= 0.
Complex liouvillian_conductivity(const Realization& r, const LiouvillianParameters& p);

/// Local Chern marker 4 pi Im <r|P x Q y P|r> averaged over the window (units e^2/h).
/// Needs d = 2 with open boundaries.
double streda_marker(const Operator& fermi_proj, const LatticeSpec& lattice, const TraceWindow& window);
/// Per-site marker values over the whole lattice.
Eigen::VectorXd streda_marker_map(const Operator& fermi_proj, const LatticeSpec& lattice);

struct KernelProfile {
    std::vector<int> distance;       ///< l1 (lattice) distance from the origin
    std::vector<double> profile;     ///< shell average of |P(o,x)|^2
    std::vector<std::size_t> pairs;  ///< (origin, x) pairs per shell
    double second_moment = 0.0;      ///< avg_o sum_x |x - o|^2 |P(o,x)|^2
    bool fitted = false;
    double rate = 0.0;               ///< mu in profile ~ A exp(-mu r)
    double amplitude = 0.0;
    double fit_residual = 0.0;       ///< rms of the log-space residuals
    int fit_shells = 0;
};

/// Origins range over the window. Open boundaries only.
KernelProfile fermi_kernel_profile(const Operator& fermi_proj, const LatticeSpec& lattice,
                                   const TraceWindow& window);

/// Exponential fit of a profile over shells r >= 1 with values above 1e-14;
/// needs at least three such shells.
void fit_kernel_decay(KernelProfile& k);

struct LinearResponse {
    std::vector<double> times;
    std::vector<double> current;  ///< J_1(t) at field eps
    double field = 0.0;
    double sigma = 0.0;           ///< time average of J_1 over the grid, divided by eps
    double sigma_half = 0.0;      ///< same at eps/2
    double nonlinearity = 0.0;    ///< |sigma - sigma_half|
    bool weak_field = true;       ///< eps L_1 <= 0.1 * bandwidth
};

/// J_1(t) = (1/N) Tr(e^{itH_eps} v_1 e^{-itH_eps} P_{E_F}), H_eps = H + eps x_1.
/// Times must be ascending; open axis 1 required.
LinearResponse linear_response_current(const Realization& r, double e_fermi, double field,
                                       const std::vector<double>& times);

/// Current series alone (no half-field companion).
std::vector<double> response_current(const Realization& r, double e_fermi, double field,
                                     const std::vector<double>& times);

/// Trapezoid time average of samples on an ascending grid.
double time_average(const std::vector<double>& times, const std::vector<double>& values);

}  // namespace ccclab
