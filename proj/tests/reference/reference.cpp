#include "reference/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cignn::testref {

namespace {

double plain_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw std::invalid_argument("naive_matmul: bad shapes " + a.shape_string() + " x " +
                                    b.shape_string());
    }
    Tensor out({a.dim(0), b.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        for (std::size_t j = 0; j < b.dim(1); ++j) {
            for (std::size_t k = 0; k < a.dim(1); ++k) {
                out.at2(i, j) += a.at2(i, k) * b.at2(k, j);
            }
        }
    }
    return out;
}

double dcca_reference(const std::vector<double>& x, const std::vector<double>& y, std::size_t window) {
    const std::size_t total = x.size();
    const std::size_t l = window;
    double cov_sum = 0.0;
    double var_x_sum = 0.0;
    double var_y_sum = 0.0;
    for (std::size_t s = 0; s + l <= total; ++s) {
        double mean_x = 0.0;
        double mean_y = 0.0;
        for (std::size_t t = s; t < s + l; ++t) {
            mean_x += x[t];
            mean_y += y[t];
        }
        mean_x /= static_cast<double>(l);
        mean_y /= static_cast<double>(l);
        double cov = 0.0;
        double var_x = 0.0;
        double var_y = 0.0;
        for (std::size_t t = s; t < s + l; ++t) {
            cov += (x[t] - mean_x) * (y[t] - mean_y);
            var_x += (x[t] - mean_x) * (x[t] - mean_x);
            var_y += (y[t] - mean_y) * (y[t] - mean_y);
        }
        cov_sum += cov / static_cast<double>(l - 1);
        var_x_sum += var_x / static_cast<double>(l - 1);
        var_y_sum += var_y / static_cast<double>(l - 1);
    }
    const double denom = static_cast<double>(total - l);
    const double f2_cov = cov_sum / denom;
    const double f2_x = var_x_sum / denom;
    const double f2_y = var_y_sum / denom;
    return f2_cov / (std::sqrt(f2_x) * std::sqrt(f2_y));
}

std::vector<Tensor> chebyshev_direct(const Tensor& m, std::size_t count) {
    if (count > 6) {
        throw std::invalid_argument("chebyshev_direct: only the first six polynomials are expanded");
    }
    const std::size_t n = m.dim(0);
    const Tensor m2 = naive_matmul(m, m);
    const Tensor m3 = naive_matmul(m2, m);
    const Tensor m4 = naive_matmul(m3, m);
    const Tensor m5 = naive_matmul(m4, m);

    const auto poly = [&](double c5, double c4, double c3, double c2, double c1, double c0) {
        Tensor t({n, n});
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = c5 * m5[i] + c4 * m4[i] + c3 * m3[i] + c2 * m2[i] + c1 * m[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            t.at2(i, i) += c0;
        }
        return t;
    };

    std::vector<Tensor> out;
    out.push_back(poly(0, 0, 0, 0, 0, 1));       // T0 = I
    out.push_back(poly(0, 0, 0, 0, 1, 0));       // T1 = M
    out.push_back(poly(0, 0, 0, 2, 0, -1));      // T2 = 2M^2 - I
    out.push_back(poly(0, 0, 4, 0, -3, 0));      // T3 = 4M^3 - 3M
    out.push_back(poly(0, 8, 0, -8, 0, 1));      // T4 = 8M^4 - 8M^2 + I
    out.push_back(poly(16, 0, -20, 0, 5, 0));    // T5 = 16M^5 - 20M^3 + 5M
    out.resize(count);
    return out;
}

std::vector<double> jacobi_eigenvalues(Tensor sym) {
    const std::size_t n = sym.dim(0);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += sym.at2(p, q) * sym.at2(p, q);
            }
        }
        if (off < 1e-24) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = sym.at2(p, q);
                if (std::abs(apq) < 1e-300) {
                    continue;
                }
                const double theta = (sym.at2(q, q) - sym.at2(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = sym.at2(k, p);
                    const double akq = sym.at2(k, q);
                    sym.at2(k, p) = c * akp - s * akq;
                    sym.at2(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = sym.at2(p, k);
                    const double aqk = sym.at2(q, k);
                    sym.at2(p, k) = c * apk - s * aqk;
                    sym.at2(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eigs(n);
    for (std::size_t i = 0; i < n; ++i) {
        eigs[i] = sym.at2(i, i);
    }
    std::sort(eigs.begin(), eigs.end());
    return eigs;
}

Tensor fusion_reference(const Tensor& w, const Tensor& b, const Tensor& z, const Tensor& s) {
    const std::size_t nj = w.dim(0);
    const std::size_t pj = w.dim(1);
    const std::size_t pi = w.dim(2);
    const std::size_t ni = w.dim(3);
    const std::size_t r = z.dim(0);

    Tensor u({nj, pj});
    for (std::size_t a = 0; a < nj; ++a) {
        for (std::size_t c = 0; c < pj; ++c) {
            for (std::size_t k = 0; k < r; ++k) {
                u.at2(a, c) += z[k] * s.at3(k, a, c);
            }
        }
    }
    Tensor gate({ni, pi});
    for (std::size_t i = 0; i < ni; ++i) {
        for (std::size_t p = 0; p < pi; ++p) {
            double acc = b.at2(i, p);
            for (std::size_t a = 0; a < nj; ++a) {
                for (std::size_t c = 0; c < pj; ++c) {
                    acc += w.data()[((a * pj + c) * pi + p) * ni + i] * u.at2(a, c);
                }
            }
            gate.at2(i, p) = plain_sigmoid(acc);
        }
    }
    Tensor out({r, ni, pi});
    for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t i = 0; i < ni; ++i) {
            for (std::size_t p = 0; p < pi; ++p) {
                out.at3(k, i, p) = z[k] * gate.at2(i, p);
            }
        }
    }
    return out;
}

namespace {

// sum_k theta[k] * basis[k] applied to the node axis, then a dense layer
// over channels -- the shared trunk of every gate, as bare loops.
Tensor gate_preactivation(const std::vector<Tensor>& stack, const Tensor& theta,
                          const std::vector<Tensor>& basis, const Tensor& fc_w, const Tensor& fc_b) {
    const std::size_t in_ch = stack.size();
    const std::size_t n = stack[0].dim(0);
    const std::size_t p = stack[0].dim(1);
    const std::size_t out_ch = fc_w.dim(0);

    std::vector<Tensor> filtered(in_ch, Tensor({n, p}));
    for (std::size_t c = 0; c < in_ch; ++c) {
        for (std::size_t k = 0; k < basis.size(); ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t f = 0; f < p; ++f) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        acc += basis[k].at2(i, j) * stack[c].at2(j, f);
                    }
                    filtered[c].at2(i, f) += theta[k] * acc;
                }
            }
        }
    }
    Tensor pre({out_ch, n, p});
    for (std::size_t o = 0; o < out_ch; ++o) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < p; ++f) {
                double acc = fc_b[o];
                for (std::size_t c = 0; c < in_ch; ++c) {
                    acc += fc_w.at2(o, c) * filtered[c].at2(i, f);
                }
                pre.at3(o, i, f) = acc;
            }
        }
    }
    return pre;
}

}  // namespace

std::vector<Tensor> cell_step_reference(const std::vector<CellGraphRef>& graphs,
                                        const std::vector<std::vector<Tensor>>& fusion_w,
                                        const std::vector<std::vector<Tensor>>& fusion_b,
                                        const Tensor& z, bool use_fusion) {
    const std::size_t m = graphs.size();
    std::vector<Tensor> blended;
    blended.reserve(m);

    for (const CellGraphRef& g : graphs) {
        const std::size_t r = g.h.dim(0);
        const std::size_t n = g.h.dim(1);
        const std::size_t p = g.h.dim(2);

        std::vector<Tensor> stack;
        stack.push_back(g.x);
        for (std::size_t c = 0; c < r; ++c) {
            Tensor channel({n, p});
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t f = 0; f < p; ++f) {
                    channel.at2(i, f) = g.h.at3(c, i, f);
                }
            }
            stack.push_back(channel);
        }

        Tensor pre_r = gate_preactivation(stack, g.theta_r, g.basis, g.fc_r_w, g.fc_r_b);
        Tensor pre_u = gate_preactivation(stack, g.theta_u, g.basis, g.fc_u_w, g.fc_u_b);
        Tensor reset(pre_r.shape());
        Tensor update(pre_u.shape());
        for (std::size_t i = 0; i < pre_r.size(); ++i) {
            reset[i] = plain_sigmoid(pre_r[i]);
            update[i] = plain_sigmoid(pre_u[i]);
        }

        std::vector<Tensor> gated_stack;
        gated_stack.push_back(g.x);
        for (std::size_t c = 0; c < r; ++c) {
            Tensor channel({n, p});
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t f = 0; f < p; ++f) {
                    channel.at2(i, f) = reset.at3(c, i, f) * g.h.at3(c, i, f);
                }
            }
            gated_stack.push_back(channel);
        }
        Tensor pre_c = gate_preactivation(gated_stack, g.theta_c, g.basis, g.fc_c_w, g.fc_c_b);
        Tensor candidate(pre_c.shape());
        for (std::size_t i = 0; i < pre_c.size(); ++i) {
            candidate[i] = std::tanh(pre_c[i]);
        }

        Tensor s(g.h.shape());
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = update[i] * g.h[i] + (1.0 - update[i]) * candidate[i];
        }
        blended.push_back(std::move(s));
    }

    std::vector<Tensor> next;
    next.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        Tensor h = blended[i];
        if (use_fusion) {
            for (std::size_t j = 0; j < m; ++j) {
                if (j == i) {
                    continue;
                }
                Tensor impact = fusion_reference(fusion_w[i][j], fusion_b[i][j], z, blended[j]);
                for (std::size_t k = 0; k < h.size(); ++k) {
                    h[k] += impact[k];
                }
            }
        }
        next.push_back(std::move(h));
    }
    return next;
}

double naive_mae(const Tensor& prediction, const Tensor& actual) {
    double acc = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        acc += std::abs(prediction[i] - actual[i]);
    }
    return acc / static_cast<double>(prediction.size());
}

double naive_rmse(const Tensor& prediction, const Tensor& actual) {
    double acc = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - actual[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(prediction.size()));
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace cignn::testref
