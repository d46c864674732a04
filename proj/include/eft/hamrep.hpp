#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eft/matrix.hpp"

namespace eft::hamrep {

// Spatial-orbital integrals, chemist ordering (pq|rs), stored flat.
struct IntegralTensors {
    int n = 0;
    int n_electrons = 0;
    Matrix h;
    std::vector<double> g;
    double e_nuc = 0.0;

    IntegralTensors() = default;
    IntegralTensors(int n_orb, int electrons);

    std::size_t index(int p, int q, int r, int s) const {
        return ((static_cast<std::size_t>(p) * n + q) * n + r) * n + s;
    }
    double& at(int p, int q, int r, int s) { return g[index(p, q, r, s)]; }
    double at(int p, int q, int r, int s) const { return g[index(p, q, r, s)]; }
};

// Throws ValidationError unless h is symmetric and g has 8-fold symmetry (1e-10).
void check_symmetry(const IntegralTensors& t);

// t_pq = h_pq - 1/2 sum_r g_prrq
Matrix effective_one_body(const IntegralTensors& t);

// f_pq = t_pq + sum_r g_pqrr
Matrix fock_like_one_body(const IntegralTensors& t);

// Eigenvalues of fock_like_one_body, descending.
std::vector<double> one_body_spectrum(const IntegralTensors& t);

// lambda: one-norm; beta: |offset|; offset: signed identity coefficient, so that
// H = offset + (operator with one-norm lambda).
struct NormShift {
    double lambda = 0.0;
    double beta = 0.0;
    double offset = 0.0;
};

NormShift pauli_norm_shift(const IntegralTensors& t);

struct DfLeaf {
    Matrix u;               // orthogonal, columns are the leaf orbitals
    std::vector<double> w;  // sqrt(|e|) times the leaf eigenvalues
    int sign = 1;           // sign of the reshaped-g eigenvalue
    double eigenvalue = 0.0;
};

struct DfFactors {
    std::vector<DfLeaf> leaves;
    double residual = 0.0;  // Frobenius norm of g minus reconstruction
};

DfFactors double_factorize(const IntegralTensors& t, int n_df);
std::vector<double> df_reconstruct(const DfFactors& f, int n);
NormShift df_norm_shift(const IntegralTensors& t, const DfFactors& f);

struct ThcFactors {
    Matrix chi;   // n x M, unit-norm columns
    Matrix zeta;  // M x M symmetric
    std::size_t rank() const { return zeta.rows(); }
};

void check_thc(const ThcFactors& f);
std::vector<double> thc_reconstruct(const ThcFactors& f);
// The offset includes e_nuc.
NormShift thc_norm_shift(const std::vector<double>& f_o, const ThcFactors& f, double e_nuc = 0.0);

// Exact THC form of a DF decomposition: one column per leaf orbital and a
// block-diagonal core, rank n_df * n.
ThcFactors thc_from_df(const DfFactors& f);

struct BlissParams {
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    Matrix beta_mat;
    int eta_particles = 0;
};

// Returns tensors whose eta-particle sector spectrum equals the input's. The
// constant absorbed from the N and N^2 shifts moves into e_nuc.
IntegralTensors bliss_transform(const IntegralTensors& t, const BlissParams& p);

// Simple parameter choice: alpha1 at the median one-body eigenvalue, no
// two-body or beta shift.
BlissParams bliss_center_one_body(const IntegralTensors& t);

IntegralTensors load_integrals(const std::string& path, std::vector<std::string>* warnings = nullptr);
IntegralTensors parse_integrals(std::istream& in, std::vector<std::string>* warnings = nullptr);
void write_integrals(std::ostream& out, const IntegralTensors& t);

ThcFactors load_thc(const std::string& path);
ThcFactors parse_thc(std::istream& in);
void write_thc(std::ostream& out, const ThcFactors& f);

// One row per (leaf, orbital): leaf,sign,eigenvalue,k,W,U_0..U_{n-1}.
void write_df_csv(std::ostream& out, const DfFactors& f);

}  // namespace eft::hamrep
