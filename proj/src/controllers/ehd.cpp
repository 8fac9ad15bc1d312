#include "ffsteer/controllers.hpp"

#include "ffsteer/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

namespace ffsteer {

namespace {

constexpr int kTerms = 4;
using Vec4 = std::array<double, kTerms>;
using Mat4 = std::array<Vec4, kTerms>;

Vec4 regressors(double a_y, double v_x) {
    const double x = a_y * a_y;
    return {x * v_x, x, v_x, 1.0};
}

// In-place Cholesky of a symmetric matrix; false when not positive definite.
bool cholesky(Mat4& a) {
    for (int j = 0; j < kTerms; ++j) {
        double d = a[j][j];
        for (int k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
        if (!(d > 0.0)) return false;
        a[j][j] = std::sqrt(d);
        for (int i = j + 1; i < kTerms; ++i) {
            double s = a[i][j];
            for (int k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
            a[i][j] = s / a[j][j];
        }
    }
    return true;
}

Vec4 cholesky_solve(const Mat4& l, Vec4 b) {
    for (int i = 0; i < kTerms; ++i) {
        for (int k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
        b[i] /= l[i][i];
    }
    for (int i = kTerms - 1; i >= 0; --i) {
        for (int k = i + 1; k < kTerms; ++k) b[i] -= l[k][i] * b[k];
        b[i] /= l[i][i];
    }
    return b;
}

// Householder QR with column pivoting on the (m x 4) design matrix.
// Returns the solution in original column order; throws when rank < 4.
Vec4 pivoted_qr_solve(std::vector<Vec4> a, std::vector<double> z) {
    const std::size_t m = a.size();
    std::array<int, kTerms> perm{0, 1, 2, 3};
    Vec4 norms{};
    for (int j = 0; j < kTerms; ++j) {
        for (const auto& row : a) norms[j] += row[j] * row[j];
    }
    double r00 = 0.0;
    std::array<double, kTerms> rdiag{};
    for (int k = 0; k < kTerms; ++k) {
        // Pivot on the largest remaining column norm.
        int p = k;
        for (int j = k + 1; j < kTerms; ++j) {
            if (norms[j] > norms[p]) p = j;
        }
        if (p != k) {
            for (auto& row : a) std::swap(row[k], row[p]);
            std::swap(norms[k], norms[p]);
            std::swap(perm[k], perm[p]);
        }
        double alpha = 0.0;
        for (std::size_t i = k; i < m; ++i) alpha += a[i][k] * a[i][k];
        alpha = std::sqrt(alpha);
        if (k == 0) r00 = alpha;
        if (alpha <= 1e-11 * r00 || alpha == 0.0) {
            throw RankDeficient("EHD regressors have rank " + std::to_string(k) + " < 4");
        }
        if (a[k][k] > 0.0) alpha = -alpha;
        std::vector<double> v(m - k);
        for (std::size_t i = k; i < m; ++i) v[i - k] = a[i][k];
        v[0] -= alpha;
        const double vnorm2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
        if (vnorm2 > 0.0) {
            for (int j = k; j < kTerms; ++j) {
                double dot = 0.0;
                for (std::size_t i = k; i < m; ++i) dot += v[i - k] * a[i][j];
                const double f = 2.0 * dot / vnorm2;
                for (std::size_t i = k; i < m; ++i) a[i][j] -= f * v[i - k];
            }
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += v[i - k] * z[i];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < m; ++i) z[i] -= f * v[i - k];
        }
        rdiag[k] = a[k][k];
        for (int j = k + 1; j < kTerms; ++j) {
            norms[j] = 0.0;
            for (std::size_t i = k + 1; i < m; ++i) norms[j] += a[i][j] * a[i][j];
        }
    }
    Vec4 sol{};
    for (int i = kTerms - 1; i >= 0; --i) {
        double s = z[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < kTerms; ++j) s -= a[static_cast<std::size_t>(i)][j] * sol[j];
        sol[i] = s / rdiag[i];
    }
    Vec4 out{};
    for (int k = 0; k < kTerms; ++k) out[perm[k]] = sol[k];
    return out;
}

}  // namespace

EhdFit fit_ehd(const std::vector<EhdSample>& samples, double min_ay) {
    std::vector<Vec4> rows;
    std::vector<double> z;
    std::vector<const EhdSample*> used;
    for (const auto& s : samples) {
        if (!std::isfinite(s.a_y) || !std::isfinite(s.v_x) || !std::isfinite(s.delta_dev)) continue;
        if (std::abs(s.a_y) < min_ay) continue;
        rows.push_back(regressors(s.a_y, s.v_x));
        z.push_back(s.delta_dev / s.a_y);
        used.push_back(&s);
    }
    if (rows.size() < kTerms) {
        throw RankDeficient("EHD fit needs at least 4 samples with |a_y| >= " + std::to_string(min_ay));
    }

    // Equilibrate columns so the normal matrix is well scaled.
    Vec4 scale{};
    for (const auto& r : rows) {
        for (int j = 0; j < kTerms; ++j) scale[j] += r[j] * r[j];
    }
    for (auto& c : scale) c = std::sqrt(c / static_cast<double>(rows.size()));
    for (auto& r : rows) {
        for (int j = 0; j < kTerms; ++j) r[j] /= scale[j];
    }

    Mat4 normal{};
    Vec4 rhs{};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int a = 0; a < kTerms; ++a) {
            rhs[a] += rows[i][a] * z[i];
            for (int b = 0; b < kTerms; ++b) normal[a][b] += rows[i][a] * rows[i][b];
        }
    }

    EhdFit fit;
    Vec4 coef{};
    Mat4 chol = normal;
    bool ok = cholesky(chol);
    if (ok) {
        double dmin = chol[0][0];
        double dmax = chol[0][0];
        for (int j = 1; j < kTerms; ++j) {
            dmin = std::min(dmin, chol[j][j]);
            dmax = std::max(dmax, chol[j][j]);
        }
        // Pivot ratio squared approximates the reciprocal condition number.
        ok = (dmin * dmin) / (dmax * dmax) > 1e-12;
    }
    if (ok) {
        coef = cholesky_solve(chol, rhs);
        // Iterative refinement against the least-squares residual.
        for (int pass = 0; pass < 2; ++pass) {
            Vec4 g{};
            for (std::size_t i = 0; i < rows.size(); ++i) {
                double r = z[i];
                for (int a = 0; a < kTerms; ++a) r -= rows[i][a] * coef[a];
                for (int a = 0; a < kTerms; ++a) g[a] += rows[i][a] * r;
            }
            const Vec4 corr = cholesky_solve(chol, g);
            for (int a = 0; a < kTerms; ++a) coef[a] += corr[a];
        }
    } else {
        coef = pivoted_qr_solve(rows, z);
        fit.used_orthogonal_fallback = true;
    }
    for (int j = 0; j < kTerms; ++j) coef[j] /= scale[j];

    fit.surface = {coef[0], coef[1], coef[2], coef[3]};
    double ss = 0.0;
    for (const auto* s : used) {
        const double e = fit.surface.deviation(s->a_y, s->v_x) - s->delta_dev;
        ss += e * e;
    }
    fit.n_samples = used.size();
    fit.residual_rms = std::sqrt(ss / static_cast<double>(used.size()));
    return fit;
}

EhdFactored factor_surface(const EhdSurface& s) {
    // M = [k_a3; k_a1] [k_v1, k_v0]; top singular pair of the 2x2 matrix.
    const double m00 = s.kt_v1a3, m01 = s.kt_a3, m10 = s.kt_v1a1, m11 = s.kt_a1;
    // Right singular vectors are eigenvectors of M^T M.
    const double a = m00 * m00 + m10 * m10;
    const double b = m00 * m01 + m10 * m11;
    const double c = m01 * m01 + m11 * m11;
    const double tr = a + c;
    const double det = a * c - b * b;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double l1 = tr / 2.0 + disc;
    const double l2 = std::max(0.0, tr / 2.0 - disc);
    double vx = b;
    double vy = l1 - a;
    if (std::hypot(vx, vy) < 1e-300) {
        vx = a >= c ? 1.0 : 0.0;
        vy = a >= c ? 0.0 : 1.0;
    }
    const double n = std::hypot(vx, vy);
    vx /= n;
    vy /= n;
    if (vy < 0.0 || (vy == 0.0 && vx < 0.0)) {
        vx = -vx;
        vy = -vy;
    }
    EhdFactored f;
    f.k_v1 = vx;
    f.k_v0 = vy;
    f.k_a3 = m00 * vx + m01 * vy;
    f.k_a1 = m10 * vx + m11 * vy;
    f.discarded_singular_value = std::sqrt(l2);
    return f;
}

double ff_ehd(const FfInput& in, const EhdSurface& surface, double wheelbase) {
    return in.ackermann(wheelbase) + surface.deviation(in.a_y_target, in.v_x);
}

void write_ehd_json(const std::string& path, const EhdFit& fit) {
    nlohmann::json j{{"kt_v1a3", fit.surface.kt_v1a3},
                     {"kt_a3", fit.surface.kt_a3},
                     {"kt_v1a1", fit.surface.kt_v1a1},
                     {"kt_a1", fit.surface.kt_a1},
                     {"residual_rms", fit.residual_rms},
                     {"n_samples", fit.n_samples}};
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

EhdFit read_ehd_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    try {
        const auto j = nlohmann::json::parse(in);
        EhdFit fit;
        fit.surface.kt_v1a3 = j.at("kt_v1a3").get<double>();
        fit.surface.kt_a3 = j.at("kt_a3").get<double>();
        fit.surface.kt_v1a1 = j.at("kt_v1a1").get<double>();
        fit.surface.kt_a1 = j.at("kt_a1").get<double>();
        fit.residual_rms = j.value("residual_rms", 0.0);
        fit.n_samples = j.value("n_samples", std::size_t{0});
        return fit;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

}  // namespace ffsteer
