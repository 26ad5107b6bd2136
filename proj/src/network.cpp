// SPDX-License-Identifier: Apache-2.0
#include "echorec/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "echorec/rng.hpp"
#include "echorec/solver.hpp"

namespace echorec {

std::string to_string(Arch a) {
    switch (a) {
        case Arch::mlp: return "mlp";
        case Arch::alista: return "alista";
        case Arch::bc: return "bc";
        case Arch::cbc: return "cbc";
    }
    return "?";
}

Arch arch_from_string(const std::string& s) {
    if (s == "mlp") return Arch::mlp;
    if (s == "alista") return Arch::alista;
    if (s == "bc") return Arch::bc;
    if (s == "cbc") return Arch::cbc;
    throw std::invalid_argument("unknown architecture: " + s);
}

std::string to_string(InitKind k) {
    switch (k) {
        case InitKind::analytic: return "analytic";
        case InitKind::xavier: return "xavier";
        case InitKind::kaiming: return "kaiming";
        case InitKind::orthogonal: return "orthogonal";
    }
    return "?";
}

InitKind init_kind_from_string(const std::string& s) {
    if (s == "analytic") return InitKind::analytic;
    if (s == "xavier") return InitKind::xavier;
    if (s == "kaiming") return InitKind::kaiming;
    if (s == "orthogonal") return InitKind::orthogonal;
    throw std::invalid_argument("unknown init kind: " + s);
}

namespace {

RandomScheme scheme_of(InitKind k) {
    switch (k) {
        case InitKind::xavier: return RandomScheme::xavier;
        case InitKind::kaiming: return RandomScheme::kaiming;
        case InitKind::orthogonal: return RandomScheme::orthogonal;
        case InitKind::analytic: break;
    }
    throw std::invalid_argument("analytic init has no random scheme");
}

void fill_common(UnrolledNet& net, const ImagingSetup& setup, int num_blocks,
                 double lambda, double lipschitz, ParamGroupFlags trainable,
                 bool share, InitSpec init) {
    if (num_blocks < 0) throw std::invalid_argument("build_network: num_blocks >= 0");
    if (!(lipschitz > 0.0)) throw std::invalid_argument("build_network: L must be positive");
    if (lambda < 0.0) throw std::invalid_argument("build_network: lambda must be >= 0");
    net.num_blocks = num_blocks;
    net.share_kernels = share;
    net.trainable = trainable;
    net.step_scale = 1.0 / lipschitz;
    net.thresholds = Eigen::VectorXd::Constant(num_blocks, lambda / lipschitz);
    net.init = init.kind;
    net.init_seed = init.seed;
    net.init_lambda = lambda;
    net.init_lipschitz = lipschitz;
    net.ns = setup.num_pixels();
    net.nd = setup.cube_size();
    net.nz = setup.grid_nz;
    net.nx = setup.grid_nx;
    net.nt = setup.num_samples;
    net.nc = setup.num_elements;
}

SliceMeta meta_of(const SliceKernel& k) {
    return {k.slice_offset, k.c_out(), k.kernel_len(), 0,
            k.stride,       k.padding, k.input_len,    k.output_len, k.multiplicity};
}

SliceMeta meta_of(const FactorizedKernel& k) {
    return {k.slice_offset, k.c_out(), k.kernel_len(), k.num_basis(),
            k.stride,       k.padding, k.input_len,    k.output_len, k.multiplicity};
}

Eigen::MatrixXd random_like(int rows, int cols, RandomScheme scheme, std::uint64_t seed) {
    // reuse the factorization schemes for arbitrary parameter tensors
    if (scheme == RandomScheme::orthogonal && rows > cols) {
        FactorPayload p = random_factorize(rows, rows, cols, scheme, seed);
        return p.mixing; // rows x cols with orthonormal columns
    }
    FactorPayload p = random_factorize(rows, cols, rows, scheme, seed);
    return p.basis;
}

} // namespace

UnrolledNet build_network(Arch arch, int num_blocks, const SliceConvModel& model,
                          double lambda, double lipschitz, ParamGroupFlags trainable,
                          bool share_kernels, InitSpec init,
                          std::uint64_t dense_cap_bytes) {
    if (arch == Arch::cbc)
        throw std::invalid_argument("cbc networks are built from a compressed model");
    UnrolledNet net;
    net.arch = arch;
    if (arch == Arch::alista) trainable = {false, false, true};
    fill_common(net, model.setup, num_blocks, lambda, lipschitz, trainable,
                share_kernels, init);
    for (const auto& k : model.slices) net.meta.push_back(meta_of(k));

    const int sets = net.num_sets();
    std::uint64_t tensor_idx = 0;
    if (arch == Arch::mlp) {
        Eigen::MatrixXd w1, w2;
        if (init.kind == InitKind::analytic) {
            const Eigen::MatrixXd a = dense_operator(model, dense_cap_bytes);
            w2 = net.step_scale * a.transpose();
            w1 = Eigen::MatrixXd::Identity(net.ns, net.ns) - w2 * a;
        }
        for (int s = 0; s < sets; ++s) {
            if (init.kind == InitKind::analytic) {
                net.w1.push_back(w1);
                net.w2.push_back(w2);
            } else {
                const RandomScheme sch = scheme_of(init.kind);
                net.w1.push_back(random_like(net.ns, net.ns, sch,
                                             derive_seed(init.seed, "net", tensor_idx++)));
                net.w2.push_back(random_like(net.ns, net.nd, sch,
                                             derive_seed(init.seed, "net", tensor_idx++)));
            }
        }
        return net;
    }

    // alista / bc: full kernel banks on both paths
    for (int s = 0; s < sets; ++s) {
        std::vector<Eigen::MatrixXd> fwd, bwd;
        for (const auto& k : model.slices) {
            if (init.kind == InitKind::analytic) {
                fwd.push_back(k.weights);
                bwd.push_back(k.weights);
            } else {
                const RandomScheme sch = scheme_of(init.kind);
                fwd.push_back(random_like(k.c_out(), k.kernel_len(), sch,
                                          derive_seed(init.seed, "net", tensor_idx++)));
                bwd.push_back(random_like(k.c_out(), k.kernel_len(), sch,
                                          derive_seed(init.seed, "net", tensor_idx++)));
            }
        }
        net.fwd_banks.push_back(std::move(fwd));
        net.bwd_banks.push_back(std::move(bwd));
    }
    return net;
}

UnrolledNet build_network(Arch arch, int num_blocks, const CompressedModel& compressed,
                          double lambda, double lipschitz, ParamGroupFlags trainable,
                          bool share_kernels, InitSpec init) {
    if (arch != Arch::cbc)
        throw std::invalid_argument("compressed-model construction is cbc-only");
    UnrolledNet net;
    net.arch = arch;
    fill_common(net, compressed.setup, num_blocks, lambda, lipschitz, trainable,
                share_kernels, init);
    for (const auto& fk : compressed.slices) net.meta.push_back(meta_of(fk));

    std::uint64_t tensor_idx = 0;
    for (int s = 0; s < net.num_sets(); ++s) {
        std::vector<CbcSlice> fwd, bwd;
        for (const auto& fk : compressed.slices) {
            if (init.kind == InitKind::analytic) {
                fwd.push_back({fk.basis, fk.mixing});
                bwd.push_back({fk.basis, fk.mixing});
            } else {
                const RandomScheme sch = scheme_of(init.kind);
                auto draw = [&] {
                    FactorPayload p =
                        random_factorize(fk.c_out(), fk.kernel_len(), fk.num_basis(), sch,
                                         derive_seed(init.seed, "net", tensor_idx++));
                    return CbcSlice{std::move(p.basis), std::move(p.mixing)};
                };
                fwd.push_back(draw());
                bwd.push_back(draw());
            }
        }
        net.fwd_factors.push_back(std::move(fwd));
        net.bwd_factors.push_back(std::move(bwd));
    }
    return net;
}

namespace {

DataCube wrap_cube(const UnrolledNet& net, const Eigen::VectorXd& v) {
    DataCube c(net.nt, net.nc);
    c.values = v;
    return c;
}

// forward operator of one slice with the given parameter set
Eigen::MatrixXd slice_op_forward(const UnrolledNet& net, int set, std::size_t s,
                                 const Eigen::MatrixXd& gathered) {
    if (net.arch == Arch::cbc) {
        const auto& p = net.fwd_factors[set][s];
        const Eigen::MatrixXd z = p.basis * gathered;
        return p.mixing * z;
    }
    return net.fwd_banks[set][s] * gathered;
}

// transposed operator of one slice applied to a cube-slice matrix
void slice_op_transposed_add(const UnrolledNet& net, int set, std::size_t s,
                             const Eigen::MatrixXd& y_slice, Eigen::VectorXd& acc) {
    const auto& m = net.meta[s];
    if (net.arch == Arch::cbc) {
        const auto& p = net.bwd_factors[set][s];
        const Eigen::MatrixXd z = p.mixing.transpose() * y_slice;
        scatter_windows_add(acc, p.basis.transpose() * z, m.stride, m.padding);
    } else {
        scatter_windows_add(acc, net.bwd_banks[set][s].transpose() * y_slice, m.stride,
                            m.padding);
    }
}

// transpose of the transposed path (a forward conv with the bwd parameters)
Eigen::MatrixXd slice_op_transposed_adjoint(const UnrolledNet& net, int set,
                                            std::size_t s,
                                            const Eigen::MatrixXd& gathered) {
    if (net.arch == Arch::cbc) {
        const auto& p = net.bwd_factors[set][s];
        const Eigen::MatrixXd z = p.basis * gathered;
        return p.mixing * z;
    }
    return net.bwd_banks[set][s] * gathered;
}

// transpose of the forward path (a transposed conv with the fwd parameters)
void slice_op_forward_adjoint_add(const UnrolledNet& net, int set, std::size_t s,
                                  const Eigen::MatrixXd& y_slice, Eigen::VectorXd& acc) {
    const auto& m = net.meta[s];
    if (net.arch == Arch::cbc) {
        const auto& p = net.fwd_factors[set][s];
        const Eigen::MatrixXd z = p.mixing.transpose() * y_slice;
        scatter_windows_add(acc, p.basis.transpose() * z, m.stride, m.padding);
    } else {
        scatter_windows_add(acc, net.fwd_banks[set][s].transpose() * y_slice, m.stride,
                            m.padding);
    }
}

Eigen::MatrixXd gather_for(const SliceMeta& m, const Eigen::VectorXd& x) {
    return gather_windows(x, m.kernel_len, m.stride, m.padding, m.output_len);
}

Eigen::VectorXd apply_forward_op(const UnrolledNet& net, int set, const Eigen::VectorXd& x) {
    DataCube cube(net.nt, net.nc);
    for (std::size_t s = 0; s < net.meta.size(); ++s)
        place_slice_symmetric(cube, net.meta[s].slice_offset,
                              slice_op_forward(net, set, s, gather_for(net.meta[s], x)));
    return cube.values;
}

Eigen::VectorXd apply_transposed_op(const UnrolledNet& net, int set,
                                    const Eigen::VectorXd& y) {
    const DataCube cube = wrap_cube(net, y);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(net.ns);
    for (std::size_t s = 0; s < net.meta.size(); ++s)
        slice_op_transposed_add(net, set, s,
                                extract_slice_sum(cube, net.meta[s].slice_offset), out);
    return out;
}

} // namespace

Eigen::VectorXd network_forward(const UnrolledNet& net, const Eigen::VectorXd& y,
                                ForwardTrace* trace) {
    if (y.size() != net.nd)
        throw std::invalid_argument("network_forward: data length mismatch");
    if (trace) {
        trace->pre.clear();
        trace->post.clear();
        trace->y = y;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(net.ns);
    for (int k = 0; k < net.num_blocks; ++k) {
        const int set = net.set_for_block(k);
        Eigen::VectorXd v;
        if (net.arch == Arch::mlp) {
            v = net.w1[set] * x + net.w2[set] * y;
        } else {
            const Eigen::VectorXd residual = apply_forward_op(net, set, x) - y;
            v = x - net.step_scale * apply_transposed_op(net, set, residual);
        }
        x = soft_threshold(v, net.thresholds[k]);
        if (trace) {
            trace->pre.push_back(std::move(v));
            trace->post.push_back(x);
        }
    }
    return x;
}

GradSet make_zero_grads(const UnrolledNet& net) {
    GradSet g;
    if (net.trainable.thresholds)
        g.d_thresholds = Eigen::VectorXd::Zero(net.num_blocks);
    const int sets = net.num_sets();
    for (int s = 0; s < sets; ++s) {
        if (net.arch == Arch::mlp) {
            if (net.trainable.forward_kernels)
                g.d_w1.push_back(Eigen::MatrixXd::Zero(net.w1[s].rows(), net.w1[s].cols()));
            if (net.trainable.transposed_kernels)
                g.d_w2.push_back(Eigen::MatrixXd::Zero(net.w2[s].rows(), net.w2[s].cols()));
        } else if (net.arch == Arch::cbc) {
            if (net.trainable.forward_kernels) {
                std::vector<CbcSlice> v;
                for (const auto& p : net.fwd_factors[s])
                    v.push_back({Eigen::MatrixXd::Zero(p.basis.rows(), p.basis.cols()),
                                 Eigen::MatrixXd::Zero(p.mixing.rows(), p.mixing.cols())});
                g.d_fwd_factors.push_back(std::move(v));
            }
            if (net.trainable.transposed_kernels) {
                std::vector<CbcSlice> v;
                for (const auto& p : net.bwd_factors[s])
                    v.push_back({Eigen::MatrixXd::Zero(p.basis.rows(), p.basis.cols()),
                                 Eigen::MatrixXd::Zero(p.mixing.rows(), p.mixing.cols())});
                g.d_bwd_factors.push_back(std::move(v));
            }
        } else { // alista, bc (alista groups are frozen; containers stay empty)
            if (net.trainable.forward_kernels) {
                std::vector<Eigen::MatrixXd> v;
                for (const auto& w : net.fwd_banks[s])
                    v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
                g.d_fwd_banks.push_back(std::move(v));
            }
            if (net.trainable.transposed_kernels) {
                std::vector<Eigen::MatrixXd> v;
                for (const auto& w : net.bwd_banks[s])
                    v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
                g.d_bwd_banks.push_back(std::move(v));
            }
        }
    }
    return g;
}

GradSet network_backward(const UnrolledNet& net, const ForwardTrace& trace,
                         const Eigen::VectorXd& x_true) {
    if (static_cast<int>(trace.pre.size()) != net.num_blocks ||
        static_cast<int>(trace.post.size()) != net.num_blocks)
        throw std::invalid_argument("network_backward: trace does not match the network");
    if (x_true.size() != net.ns)
        throw std::invalid_argument("network_backward: x_true length mismatch");

    GradSet grads = make_zero_grads(net);
    const Eigen::VectorXd x_hat =
        net.num_blocks > 0 ? trace.post.back() : Eigen::VectorXd::Zero(net.ns);
    Eigen::VectorXd g = (2.0 / net.ns) * (x_hat - x_true);

    for (int k = net.num_blocks - 1; k >= 0; --k) {
        const int set = net.set_for_block(k);
        const Eigen::VectorXd& v = trace.pre[k];
        const double theta = net.thresholds[k];

        // shrinkage backward: pass-through on active entries, 0 at the kink
        Eigen::VectorXd g_v = Eigen::VectorXd::Zero(net.ns);
        double d_theta = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::abs(v[i]) > theta) {
                g_v[i] = g[i];
                d_theta -= g[i] * (v[i] > 0.0 ? 1.0 : -1.0);
            }
        }
        if (net.trainable.thresholds) grads.d_thresholds[k] += d_theta;

        const Eigen::VectorXd x_prev =
            k > 0 ? trace.post[k - 1] : Eigen::VectorXd::Zero(net.ns);

        if (net.arch == Arch::mlp) {
            if (net.trainable.forward_kernels)
                grads.d_w1[set].noalias() += g_v * x_prev.transpose();
            if (net.trainable.transposed_kernels)
                grads.d_w2[set].noalias() += g_v * trace.y.transpose();
            g = net.w1[set].transpose() * g_v;
            continue;
        }

        // conv architectures: recompute block internals from the trace
        const double s_scale = net.step_scale;
        std::vector<Eigen::MatrixXd> gx, gg; // gathered windows per slice
        gx.reserve(net.meta.size());
        gg.reserve(net.meta.size());
        for (const auto& m : net.meta) {
            gx.push_back(gather_for(m, x_prev));
            gg.push_back(gather_for(m, g_v));
        }

        DataCube r_cube(net.nt, net.nc);
        DataCube u_cube(net.nt, net.nc);
        for (std::size_t s = 0; s < net.meta.size(); ++s) {
            const int d = net.meta[s].slice_offset;
            place_slice_symmetric(r_cube, d, slice_op_forward(net, set, s, gx[s]));
            place_slice_symmetric(u_cube, d, slice_op_transposed_adjoint(net, set, s, gg[s]));
        }
        r_cube.values -= trace.y;

        // input gradient: g_v - step * F^T(T^T(g_v))
        Eigen::VectorXd back = Eigen::VectorXd::Zero(net.ns);
        for (std::size_t s = 0; s < net.meta.size(); ++s)
            slice_op_forward_adjoint_add(net, set, s,
                                         extract_slice_sum(u_cube, net.meta[s].slice_offset),
                                         back);
        Eigen::VectorXd g_next = g_v - s_scale * back;

        for (std::size_t s = 0; s < net.meta.size(); ++s) {
            const int d = net.meta[s].slice_offset;
            if (net.trainable.transposed_kernels) {
                const Eigen::MatrixXd rd = extract_slice_sum(r_cube, d);
                if (net.arch == Arch::cbc) {
                    const auto& p = net.bwd_factors[set][s];
                    const Eigen::MatrixXd zg = p.basis * gg[s];
                    grads.d_bwd_factors[set][s].mixing.noalias() -=
                        s_scale * rd * zg.transpose();
                    grads.d_bwd_factors[set][s].basis.noalias() -=
                        s_scale * (p.mixing.transpose() * rd) * gg[s].transpose();
                } else {
                    grads.d_bwd_banks[set][s].noalias() -= s_scale * rd * gg[s].transpose();
                }
            }
            if (net.trainable.forward_kernels) {
                const Eigen::MatrixXd dd = -s_scale * extract_slice_sum(u_cube, d);
                if (net.arch == Arch::cbc) {
                    const auto& p = net.fwd_factors[set][s];
                    const Eigen::MatrixXd zx = p.basis * gx[s];
                    grads.d_fwd_factors[set][s].mixing.noalias() += dd * zx.transpose();
                    grads.d_fwd_factors[set][s].basis.noalias() +=
                        (p.mixing.transpose() * dd) * gx[s].transpose();
                } else {
                    grads.d_fwd_banks[set][s].noalias() += dd * gx[s].transpose();
                }
            }
        }
        g = std::move(g_next);
    }
    return grads;
}

namespace {

void push_view(std::vector<ParamView>& out, Eigen::MatrixXd& m) {
    out.push_back({m.data(), m.size()});
}
void push_view(std::vector<ParamView>& out, Eigen::VectorXd& v) {
    out.push_back({v.data(), v.size()});
}

} // namespace

std::vector<ParamView> trainable_params(UnrolledNet& net) {
    std::vector<ParamView> views;
    if (net.trainable.thresholds && net.num_blocks > 0) push_view(views, net.thresholds);
    for (int s = 0; s < net.num_sets(); ++s) {
        if (net.arch == Arch::mlp) {
            if (net.trainable.forward_kernels) push_view(views, net.w1[s]);
            if (net.trainable.transposed_kernels) push_view(views, net.w2[s]);
        } else if (net.arch == Arch::cbc) {
            if (net.trainable.forward_kernels)
                for (auto& p : net.fwd_factors[s]) {
                    push_view(views, p.basis);
                    push_view(views, p.mixing);
                }
            if (net.trainable.transposed_kernels)
                for (auto& p : net.bwd_factors[s]) {
                    push_view(views, p.basis);
                    push_view(views, p.mixing);
                }
        } else {
            if (net.trainable.forward_kernels)
                for (auto& w : net.fwd_banks[s]) push_view(views, w);
            if (net.trainable.transposed_kernels)
                for (auto& w : net.bwd_banks[s]) push_view(views, w);
        }
    }
    return views;
}

std::vector<ParamView> grad_views(GradSet& grads, const UnrolledNet& net) {
    std::vector<ParamView> views;
    if (net.trainable.thresholds && net.num_blocks > 0)
        push_view(views, grads.d_thresholds);
    for (int s = 0; s < net.num_sets(); ++s) {
        if (net.arch == Arch::mlp) {
            if (net.trainable.forward_kernels) push_view(views, grads.d_w1[s]);
            if (net.trainable.transposed_kernels) push_view(views, grads.d_w2[s]);
        } else if (net.arch == Arch::cbc) {
            if (net.trainable.forward_kernels)
                for (auto& p : grads.d_fwd_factors[s]) {
                    push_view(views, p.basis);
                    push_view(views, p.mixing);
                }
            if (net.trainable.transposed_kernels)
                for (auto& p : grads.d_bwd_factors[s]) {
                    push_view(views, p.basis);
                    push_view(views, p.mixing);
                }
        } else {
            if (net.trainable.forward_kernels)
                for (auto& w : grads.d_fwd_banks[s]) push_view(views, w);
            if (net.trainable.transposed_kernels)
                for (auto& w : grads.d_bwd_banks[s]) push_view(views, w);
        }
    }
    return views;
}

std::int64_t count_trainable(const UnrolledNet& net) {
    std::int64_t n = 0;
    auto& mut = const_cast<UnrolledNet&>(net);
    for (const auto& v : trainable_params(mut)) n += v.size;
    return n;
}

GradCheckResult gradient_check(UnrolledNet& net, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& x_true, double h,
                               std::int64_t max_checked, std::uint64_t seed) {
    GradCheckResult result;
    auto views = trainable_params(net);
    std::int64_t total = 0;
    for (const auto& v : views) total += v.size;
    if (total == 0) {
        result.vacuous = true;
        return result;
    }

    ForwardTrace trace;
    network_forward(net, y, &trace);
    GradSet grads = network_backward(net, trace, x_true);
    auto gviews = grad_views(grads, net);

    auto loss = [&]() {
        const Eigen::VectorXd x_hat = network_forward(net, y);
        return (x_hat - x_true).squaredNorm() / net.ns;
    };

    std::vector<std::int64_t> indices(total);
    for (std::int64_t i = 0; i < total; ++i) indices[i] = i;
    if (total > max_checked) {
        Rng rng(derive_seed(seed, "grad-check"));
        for (std::int64_t i = 0; i < max_checked; ++i) {
            const auto j = rng.uniform_int(i, total - 1);
            std::swap(indices[i], indices[j]);
        }
        indices.resize(max_checked);
    }

    for (const auto flat : indices) {
        std::int64_t off = flat;
        std::size_t vi = 0;
        while (off >= views[vi].size) {
            off -= views[vi].size;
            ++vi;
        }
        double* p = views[vi].data + off;
        const double analytic = gviews[vi].data[off];
        const double saved = *p;
        *p = saved + h;
        const double lp = loss();
        *p = saved - h;
        const double lm = loss();
        *p = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(analytic), std::abs(fd), 1.0});
        result.max_rel_deviation =
            std::max(result.max_rel_deviation, std::abs(analytic - fd) / denom);
        ++result.checked;
    }
    return result;
}

} // namespace echorec
