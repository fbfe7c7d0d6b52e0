#pragma once

// Plain nested-loop reference implementations used as independent oracles.

#include <cmath>
#include <vector>

namespace multifuser::oracle {

using Matrix = std::vector<std::vector<double>>;  // row-major [rows][cols]

inline Matrix from_flat(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
    Matrix m(rows, std::vector<double>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m[r][c] = flat[r * cols + c];
    return m;
}

inline std::vector<double> layer_norm_row(const std::vector<double>& x, const std::vector<double>& g,
                                          const std::vector<double>& b, double eps) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (x[i] - mean) / std::sqrt(var + eps) * g[i] + b[i];
    return y;
}

inline double gelu(double x) {
    const double c = std::sqrt(2.0 / M_PI);
    return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

// y = x W + b with W stored [in][out]
inline std::vector<double> linear(const std::vector<double>& x, const Matrix& w, const std::vector<double>* b) {
    std::vector<double> y(w[0].size(), 0.0);
    for (std::size_t j = 0; j < y.size(); ++j) {
        double acc = b ? (*b)[j] : 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i][j];
        y[j] = acc;
    }
    return y;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    std::vector<double> e(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) total += e[i] = std::exp(z[i] - mx);
    for (double& v : e) v /= total;
    return e;
}

struct FfnWeights {
    std::vector<double> norm_gain, norm_bias;
    Matrix expand_w;
    std::vector<double> expand_b;
    Matrix contract_w;
    std::vector<double> contract_b;
};

inline std::vector<double> ffn_branch(const std::vector<double>& x, const FfnWeights& f, double eps) {
    std::vector<double> h = linear(layer_norm_row(x, f.norm_gain, f.norm_bias, eps), f.expand_w, &f.expand_b);
    for (double& v : h) v = gelu(v);
    return linear(h, f.contract_w, &f.contract_b);
}

struct PafWeights {
    std::size_t heads;
    std::vector<double> norm_gain, norm_bias;
    Matrix q, k, v, u;  // [D][D]
    FfnWeights ffn;
};

// One head's M x M interrelation over the normalized group.
inline Matrix paf_interrelation(const Matrix& normed, const PafWeights& p, std::size_t head) {
    const std::size_t M = normed.size(), D = normed[0].size(), dh = D / p.heads;
    Matrix r(M, std::vector<double>(M));
    for (std::size_t a = 0; a < M; ++a) {
        std::vector<double> scores(M);
        for (std::size_t b = 0; b < M; ++b) {
            double s = 0.0;
            for (std::size_t c = head * dh; c < (head + 1) * dh; ++c) {
                double qa = 0.0, kb = 0.0;
                for (std::size_t i = 0; i < D; ++i) {
                    qa += normed[a][i] * p.q[i][c];
                    kb += normed[b][i] * p.k[i][c];
                }
                s += qa * kb;
            }
            scores[b] = s;
        }
        r[a] = softmax(scores);
    }
    return r;
}

// Full PAF block on one group B [M][D].
inline Matrix paf_block(const Matrix& group, const PafWeights& p, double eps) {
    const std::size_t M = group.size(), D = group[0].size(), dh = D / p.heads;
    Matrix normed(M);
    for (std::size_t m = 0; m < M; ++m) normed[m] = layer_norm_row(group[m], p.norm_gain, p.norm_bias, eps);
    Matrix values(M, std::vector<double>(D, 0.0));
    for (std::size_t m = 0; m < M; ++m) values[m] = linear(normed[m], p.v, nullptr);
    Matrix concat(M, std::vector<double>(D, 0.0));
    for (std::size_t n = 0; n < p.heads; ++n) {
        Matrix r = paf_interrelation(normed, p, n);
        for (std::size_t a = 0; a < M; ++a)
            for (std::size_t c = n * dh; c < (n + 1) * dh; ++c) {
                double acc = 0.0;
                for (std::size_t b = 0; b < M; ++b) acc += r[a][b] * values[b][c];
                concat[a][c] = acc;
            }
    }
    Matrix out(M);
    for (std::size_t m = 0; m < M; ++m) {
        std::vector<double> y = linear(concat[m], p.u, nullptr);
        for (std::size_t i = 0; i < D; ++i) y[i] += group[m][i];
        std::vector<double> f = ffn_branch(y, p.ffn, eps);
        for (std::size_t i = 0; i < D; ++i) y[i] += f[i];
        out[m] = y;
    }
    return out;
}

}  // namespace multifuser::oracle
