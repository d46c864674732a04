#include <algorithm>
#include <cmath>
#include <numeric>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"

namespace eft::numerics {

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// vt holds eigenvectors as rows so both updates stream contiguous memory
// except the mirrored column writes of a.
void rotate(Matrix& a, Matrix& vt, std::size_t p, std::size_t q) {
    const std::size_t n = a.rows();
    const double apq = a(p, q);
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;

    const double app = a(p, p) - t * apq;
    const double aqq = a(q, q) + t * apq;
    double* rp = &a(p, 0);
    double* rq = &a(q, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const double arp = rp[r], arq = rq[r];
        rp[r] = c * arp - s * arq;
        rq[r] = s * arp + c * arq;
    }
    rp[p] = app;
    rq[q] = aqq;
    rp[q] = rq[p] = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        a(r, p) = rp[r];
        a(r, q) = rq[r];
    }
    double* vp = &vt(p, 0);
    double* vq = &vt(q, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const double x = vp[r], y = vq[r];
        vp[r] = c * x - s * y;
        vq[r] = s * x + c * y;
    }
}

}  // namespace

SymEigResult sym_eig(const Matrix& input) {
    if (!input.square() || input.rows() == 0) throw ContractError("sym_eig needs a non-empty square matrix");
    if (!input.all_finite()) throw DomainError("sym_eig input has non-finite entries");
    const std::size_t n = input.rows();

    const double scale = input.max_abs();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(input(i, j) - input(j, i)) > 1e-10 * scale)
                throw ContractError("sym_eig input is not symmetric");
            a(i, j) = 0.5 * (input(i, j) + input(j, i));
        }
    Matrix vt = Matrix::identity(n);

    const double target = 1e-14 * a.frobenius();
    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_diagonal_norm(a) <= target) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                // Skip entries that cannot change the diagonal at working precision.
                const double apq = std::abs(a(p, q));
                if (apq == 0.0) continue;
                if (apq < 1e-18 * (std::abs(a(p, p)) + std::abs(a(q, q))) ) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                rotate(a, vt, p, q);
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    SymEigResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.eigenvalues[k] = a(src, src);
        double lead = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(vt(src, i)) > 1e-12) {
                lead = vt(src, i);
                break;
            }
        const double sign = lead < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = sign * vt(src, i);
    }
    return out;
}

}  // namespace eft::numerics
