#pragma once

#include "spiralis/grid.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace spiralis {

using cplx = std::complex<double>;

struct Atom {
    double xi;
    cplx w;
};

// An element of L1(R) + C*delta in the Fourier variable p: exact point masses plus
// a density stored as cell averages on a shared PGrid.
class SpectralMeasure {
public:
    explicit SpectralMeasure(PGridPtr grid);

    static SpectralMeasure delta(PGridPtr grid, double xi, cplx w = 1.0);
    // Cell averages of f, integrated with composite Gauss-Legendre per cell.
    static SpectralMeasure from_density(PGridPtr grid, const std::function<cplx(double)>& f);

    const PGrid& grid() const { return *grid_; }
    const PGridPtr& grid_ptr() const { return grid_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<cplx>& cells() const { return cells_; }
    std::vector<cplx>& cells() { return cells_; }

    // Merges with an existing atom at the same location (within 1e-9 h).
    void add_atom(double xi, cplx w);
    cplx atom_at(double xi) const;

    SpectralMeasure& operator+=(const SpectralMeasure& other);
    SpectralMeasure& operator-=(const SpectralMeasure& other);
    SpectralMeasure& operator*=(cplx a);
    // this += a * other
    SpectralMeasure& axpy(cplx a, const SpectralMeasure& other);

    // p -> -p followed by complex conjugation (the image of the -n mode).
    SpectralMeasure reflected_conj() const;

    double l1_norm() const;
    cplx total_mass() const;
    double max_abs_cell() const;
    // Largest deviation from m(-p) = conj(m(p)) over atoms and cells.
    double hermitian_defect() const;

private:
    PGridPtr grid_;
    std::vector<Atom> atoms_;
    std::vector<cplx> cells_;
};

SpectralMeasure operator+(SpectralMeasure a, const SpectralMeasure& b);
SpectralMeasure operator-(SpectralMeasure a, const SpectralMeasure& b);
SpectralMeasure operator*(cplx a, SpectralMeasure m);

double l1_delta_norm(const SpectralMeasure& m);

// Weight polynomial q(p, beta) = sum c * p^p_pow * beta^beta_pow; empty means q = 1.
struct WeightTerm {
    cplx c;
    int p_pow;
    int beta_pow;
};
using WeightRule = std::vector<WeightTerm>;

// Weight of the scaled derivative beta*d/dbeta: q = i p beta.
WeightRule beta_dbeta_weight();

// sum_atoms w q(xi,beta) e^{i xi beta} + integral density q e^{i p beta} dp.  Cell averages
// are de-averaged by dividing out sinc(h beta / 2), which makes the transform exact for
// a density whose exact cell averages are stored.
cplx eval_at_beta(const SpectralMeasure& m, double beta, const WeightRule& q = {});

// Same transform (q = 1) on all nodes of a BetaGrid, via a chirp-z convolution.
std::vector<cplx> eval_on_grid(const SpectralMeasure& m, const BetaGrid& bg);
// Same on an arbitrary uniform set beta0 + k*dbeta, k < count.
std::vector<cplx> eval_uniform(const SpectralMeasure& m, double beta0, double dbeta, int count);

// Splits samples into a tail constant (atom at 0) and a tapered decaying part whose
// cell averages are computed by trapezoid quadrature of the inverse transform.
SpectralMeasure physical_to_spectral(const std::vector<cplx>& samples, const BetaGrid& bg,
                                     PGridPtr grid);

// X_k = sum_j x_j exp(i a j k), k = 0..count-1, by Bluestein's algorithm.
std::vector<cplx> chirp_sum(const std::vector<cplx>& x, double a, int count);

} // namespace spiralis
