#include "crofton/counting.hpp"

#include "crofton/error.hpp"
#include "crofton/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crofton {

FeatureMap immersion_block(const ParamManifold& m, int offset, int size) {
    require(offset >= 0 && size >= 1 && offset + size <= m.ambient_dim(), "immersion_block: block out of range");
    FeatureMap f;
    f.dim = size;
    f.value = [m, offset, size](const ChartPoint& p) -> Vec { return m.point(p).segment(offset, size); };
    f.jacobian = [m, offset, size](const ChartPoint& p) -> Mat { return m.differential(p).middleRows(offset, size); };
    return f;
}

namespace {

bool neg(double v) { return v < 0.0; }

std::size_t strided_changes(const double* s, std::size_t nodes, std::size_t stride, bool periodic) {
    std::size_t count = 0;
    std::size_t prev = 0;
    for (std::size_t j = stride; j < nodes; j += stride) {
        count += neg(s[prev]) != neg(s[j]);
        prev = j;
    }
    if (periodic) count += neg(s[prev]) != neg(s[0]);
    return count;
}

// Local extremum of s at j with |s[j]| < tol, or an endpoint of an open chart
// sitting on the hyperplane.
bool near_tangency(const double* s, std::size_t nodes, bool periodic, double tol) {
    for (std::size_t j = 0; j < nodes; ++j) {
        if (!(std::fabs(s[j]) < tol)) continue;
        if (!periodic && (j == 0 || j + 1 == nodes)) return true;
        const double a = s[j == 0 ? nodes - 1 : j - 1];
        const double b = s[j + 1 == nodes ? 0 : j + 1];
        if ((s[j] - a) * (b - s[j]) <= 0.0) return true;
    }
    return false;
}

double residual(const FeatureMap& phi, const ChartPoint& p, const Vec& u, double c) {
    return phi.value(p).dot(u) - c;
}

}  // namespace

CurveCounter::CurveCounter(const ParamManifold& curve, FeatureMap phi, CountOptions opts)
    : curve_(curve), phi_(std::move(phi)), opts_(opts) {
    require(curve_.param_dim() == 1, "CurveCounter: manifold must be a curve");
    require(phi_.dim >= 1 && phi_.value, "CurveCounter: empty feature map");
    require(opts_.curve_grid >= 16 && opts_.curve_grid % 4 == 0, "CurveCounter: grid must be a multiple of 4, >= 16");
    const std::size_t n = opts_.curve_grid;
    for (std::size_t ci = 0; ci < curve_.charts().size(); ++ci) {
        const Chart& ch = curve_.charts()[ci];
        ChartGrid g;
        g.chart = ci;
        g.periodic = ch.periodic[0];
        g.box = ch.box[0];
        g.nodes = g.periodic ? n : n + 1;
        g.rows.assign(static_cast<std::size_t>(phi_.dim), std::vector<double>(g.nodes));
        for (std::size_t j = 0; j < g.nodes; ++j) {
            const Vec v = phi_.value({ci, Vec::Constant(1, parameter(g, n, j))});
            require(v.size() == phi_.dim, "CurveCounter: feature map returned the wrong dimension");
            for (int k = 0; k < phi_.dim; ++k) g.rows[static_cast<std::size_t>(k)][j] = v[k];
            radius_ = std::max(radius_, v.norm());
        }
        grids_.push_back(std::move(g));
    }
}

double CurveCounter::parameter(const ChartGrid& g, std::size_t cells, std::size_t j) const {
    return g.box.lo + g.box.width() * static_cast<double>(j) / static_cast<double>(cells);
}

std::size_t CurveCounter::count_level(const ChartGrid& g, std::size_t cells, const Vec& u, double c) const {
    const std::size_t nodes = g.periodic ? cells : cells + 1;
    std::vector<double> s(nodes);
    for (std::size_t j = 0; j < nodes; ++j) s[j] = residual(phi_, {g.chart, Vec::Constant(1, parameter(g, cells, j))}, u, c);
    return simd::kernels().sign_changes(s.data(), nodes, g.periodic);
}

CountOutcome CurveCounter::count(const Vec& u, double c, CountScratch& scratch,
                                 std::vector<ChartPoint>* roots) const {
    require(u.size() == phi_.dim, "CurveCounter::count: normal has the wrong dimension");
    const auto& k = simd::kernels();
    const std::size_t n = opts_.curve_grid;
    CountOutcome out;
    if (roots) roots->clear();
    std::vector<const double*> rows(static_cast<std::size_t>(phi_.dim));
    for (const ChartGrid& g : grids_) {
        for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = g.rows[r].data();
        scratch.s.resize(g.nodes);
        double* s = scratch.s.data();
        k.affine_residuals(rows.data(), phi_.dim, g.nodes, u.data(), c, s);
        if (k.min_abs(s, g.nodes) < opts_.tangency_tol && near_tangency(s, g.nodes, g.periodic, opts_.tangency_tol))
            return {CountStatus::degenerate, 0};

        std::vector<std::size_t> history{strided_changes(s, g.nodes, 4, g.periodic),
                                         strided_changes(s, g.nodes, 2, g.periodic),
                                         k.sign_changes(s, g.nodes, g.periodic)};
        std::size_t cells = n;
        auto stable = [&] {
            const std::size_t h = history.size();
            return history[h - 1] == history[h - 2] && history[h - 2] == history[h - 3];
        };
        for (int r = 0; !stable(); ++r) {
            if (r == opts_.max_refinements) return {CountStatus::failed, 0};
            cells *= 2;
            history.push_back(count_level(g, cells, u, c));
        }
        out.count += history.back();

        if (roots) {
            const std::size_t nodes = g.periodic ? cells : cells + 1;
            auto at = [&](std::size_t j) { return parameter(g, cells, j); };
            auto f = [&](double t) { return residual(phi_, {g.chart, Vec::Constant(1, t)}, u, c); };
            const std::size_t last = g.periodic ? nodes : nodes - 1;
            for (std::size_t j = 0; j < last; ++j) {
                double a = at(j), b = at(j + 1);
                double fa = f(a);
                if (neg(fa) == neg(f(b))) continue;
                while (b - a > opts_.root_tol) {
                    const double mid = 0.5 * (a + b);
                    if (mid <= a || mid >= b) break;
                    const double fm = f(mid);
                    if (neg(fm) == neg(fa)) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                double t = 0.5 * (a + b);
                if (g.periodic && t >= g.box.hi) t -= g.box.width();
                roots->push_back({g.chart, Vec::Constant(1, t)});
            }
        }
    }
    return out;
}

SurfaceCounter::SurfaceCounter(const ParamManifold& surface, std::array<FeatureMap, 2> phis, CountOptions opts)
    : surface_(surface), phis_(std::move(phis)), opts_(opts) {
    require(surface_.param_dim() == 2, "SurfaceCounter: manifold must be a surface");
    for (const auto& p : phis_)
        require(p.dim >= 1 && p.value && p.jacobian, "SurfaceCounter: feature maps need values and Jacobians");
    require(opts_.surface_grid >= 16 && opts_.surface_grid % 4 == 0,
            "SurfaceCounter: grid must be a multiple of 4, >= 16");
    const std::size_t n = opts_.surface_grid;
    for (std::size_t ci = 0; ci < surface_.charts().size(); ++ci) {
        const Chart& ch = surface_.charts()[ci];
        ChartGrid g;
        g.chart = ci;
        for (std::size_t a = 0; a < 2; ++a) {
            g.periodic[a] = ch.periodic[a];
            g.box[a] = ch.box[a];
            g.nodes[a] = g.periodic[a] ? n : n + 1;
        }
        const std::size_t total = g.nodes[0] * g.nodes[1];
        for (std::size_t e = 0; e < 2; ++e)
            g.rows[e].assign(static_cast<std::size_t>(phis_[e].dim), std::vector<double>(total));
        Vec t(2);
        for (std::size_t i = 0; i < g.nodes[0]; ++i) {
            t[0] = g.box[0].lo + g.box[0].width() * static_cast<double>(i) / static_cast<double>(n);
            for (std::size_t j = 0; j < g.nodes[1]; ++j) {
                t[1] = g.box[1].lo + g.box[1].width() * static_cast<double>(j) / static_cast<double>(n);
                for (std::size_t e = 0; e < 2; ++e) {
                    const Vec v = phis_[e].value({ci, t});
                    require(v.size() == phis_[e].dim, "SurfaceCounter: feature map returned the wrong dimension");
                    for (int k = 0; k < v.size(); ++k) g.rows[e][static_cast<std::size_t>(k)][i * g.nodes[1] + j] = v[k];
                    radius_[e] = std::max(radius_[e], v.norm());
                }
            }
        }
        grids_.push_back(std::move(g));
    }
}

namespace {

struct Pt {
    double x, y;
};

// Marching-squares segments of one function in the unit cell. Corners in
// order (0,0), (1,0), (1,1), (0,1); edge e joins corner e and corner e+1.
int cell_segments(const double v[4], Pt seg[2][2]) {
    static constexpr Pt corner[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    Pt cross[4];
    bool has[4];
    for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) & 3;
        has[e] = neg(v[a]) != neg(v[b]);
        if (has[e]) {
            const double w = v[a] / (v[a] - v[b]);
            cross[e] = {corner[a].x + w * (corner[b].x - corner[a].x), corner[a].y + w * (corner[b].y - corner[a].y)};
        }
    }
    int edges[4], ne = 0;
    for (int e = 0; e < 4; ++e)
        if (has[e]) edges[ne++] = e;
    if (ne == 2) {
        seg[0][0] = cross[edges[0]];
        seg[0][1] = cross[edges[1]];
        return 1;
    }
    if (ne != 4) return 0;
    const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
    if (neg(center) == neg(v[0])) {
        seg[0][0] = cross[0], seg[0][1] = cross[1];
        seg[1][0] = cross[2], seg[1][1] = cross[3];
    } else {
        seg[0][0] = cross[3], seg[0][1] = cross[0];
        seg[1][0] = cross[1], seg[1][1] = cross[2];
    }
    return 2;
}

// Intersection of segments p0p1 and q0q1 with both parameters in [-slack, 1 + slack].
bool segment_hit(Pt p0, Pt p1, Pt q0, Pt q1, double slack, Pt& hit) {
    const double rx = p1.x - p0.x, ry = p1.y - p0.y;
    const double sx = q1.x - q0.x, sy = q1.y - q0.y;
    const double den = rx * sy - ry * sx;
    if (den == 0.0) return false;
    const double qx = q0.x - p0.x, qy = q0.y - p0.y;
    const double a = (qx * sy - qy * sx) / den;
    const double b = (qx * ry - qy * rx) / den;
    if (a < -slack || a > 1.0 + slack || b < -slack || b > 1.0 + slack) return false;
    hit = {p0.x + a * rx, p0.y + a * ry};
    return true;
}

void fill_signs(const double* f1, const double* f2, std::size_t n, std::uint8_t* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<std::uint8_t>(static_cast<unsigned>(f1[i] < 0.0) | (static_cast<unsigned>(f2[i] < 0.0) << 1));
}

}  // namespace

std::optional<ChartPoint> SurfaceCounter::newton(const ChartGrid& g, Vec t, const std::array<Vec, 2>& u,
                                                 const std::array<double, 2>& c, bool& singular) const {
    singular = false;
    auto wrap = [&](Vec& x) {
        for (int a = 0; a < 2; ++a) {
            const Interval& b = g.box[static_cast<std::size_t>(a)];
            if (g.periodic[static_cast<std::size_t>(a)]) {
                x[a] = b.lo + std::fmod(x[a] - b.lo, b.width());
                if (x[a] < b.lo) x[a] += b.width();
            }
        }
    };
    const double max_step = 0.25 * std::min(g.box[0].width(), g.box[1].width());
    for (int it = 0; it < 50; ++it) {
        const ChartPoint p{g.chart, t};
        const double f1 = residual(phis_[0], p, u[0], c[0]);
        const double f2 = residual(phis_[1], p, u[1], c[1]);
        const Vec j1 = phis_[0].jacobian(p).transpose() * u[0];
        const Vec j2 = phis_[1].jacobian(p).transpose() * u[1];
        const double det = j1[0] * j2[1] - j1[1] * j2[0];
        if (std::fabs(f1) < opts_.newton_tol && std::fabs(f2) < opts_.newton_tol) {
            if (!(std::fabs(det) > opts_.tangency_tol * j1.norm() * j2.norm())) singular = true;
            for (int a = 0; a < 2; ++a) {
                const Interval& b = g.box[static_cast<std::size_t>(a)];
                if (!g.periodic[static_cast<std::size_t>(a)] && (t[a] < b.lo || t[a] > b.hi)) return std::nullopt;
            }
            return p;
        }
        if (!(std::fabs(det) > 0.0) || !std::isfinite(det)) {
            singular = true;
            return std::nullopt;
        }
        Vec step(2);
        step[0] = (f1 * j2[1] - f2 * j1[1]) / det;
        step[1] = (j1[0] * f2 - j2[0] * f1) / det;
        const double len = step.norm();
        if (len > max_step) step *= max_step / len;
        t -= step;
        wrap(t);
        for (int a = 0; a < 2; ++a) {
            const Interval& b = g.box[static_cast<std::size_t>(a)];
            const double margin = 0.5 * b.width();
            if (!g.periodic[static_cast<std::size_t>(a)] && (t[a] < b.lo - margin || t[a] > b.hi + margin))
                return std::nullopt;
        }
    }
    singular = true;
    return std::nullopt;
}

double SurfaceCounter::distance(const ChartGrid& g, const ChartPoint& a, const ChartPoint& b) const {
    auto wrapped = [&](double d, std::size_t axis) {
        if (!g.periodic[axis]) return d;
        const double w = g.box[axis].width();
        return d - w * std::round(d / w);
    };
    return std::hypot(wrapped(a.t[0] - b.t[0], 0), wrapped(a.t[1] - b.t[1], 1));
}

bool SurfaceCounter::cell_roots(const ChartGrid& g, const double a[4], const double b[4], double x0, double y0,
                                double h0, double h1, const std::array<Vec, 2>& u, const std::array<double, 2>& c,
                                std::vector<ChartPoint>& known, std::vector<char>& claimed,
                                std::vector<ChartPoint>& found) const {
    constexpr double slack = 0.05;
    const double dedup = opts_.dedup_rel * std::hypot(g.box[0].width(), g.box[1].width());
    auto local = [&](double d, std::size_t axis) {
        if (!g.periodic[axis]) return d;
        const double w = g.box[axis].width();
        return d - w * std::round(d / w);
    };
    Pt sa[2][2], sb[2][2];
    const int na = cell_segments(a, sa), nb = cell_segments(b, sb);
    for (int x = 0; x < na; ++x) {
        for (int y = 0; y < nb; ++y) {
            Pt hit;
            if (!segment_hit(sa[x][0], sa[x][1], sb[y][0], sb[y][1], slack, hit)) continue;
            const bool inside = hit.x >= 0.0 && hit.x <= 1.0 && hit.y >= 0.0 && hit.y <= 1.0;
            Vec t(2);
            t[0] = x0 + hit.x * h0;
            t[1] = y0 + hit.y * h1;
            const ChartPoint start{g.chart, t};

            std::size_t best = known.size();
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < known.size(); ++r) {
                if (claimed[r]) continue;
                const double lx = local(known[r].t[0] - x0, 0) / h0;
                const double ly = local(known[r].t[1] - y0, 1) / h1;
                if (lx < -slack || lx > 1.0 + slack || ly < -slack || ly > 1.0 + slack) continue;
                const double d = distance(g, known[r], start);
                if (d < best_d) best_d = d, best = r;
            }
            if (best < known.size()) {
                claimed[best] = 1;
                found.push_back(known[best]);
                continue;
            }

            bool singular = false;
            const auto root = newton(g, t, u, c, singular);
            if (singular && inside) return false;
            if (!root) continue;
            std::size_t match = known.size();
            for (std::size_t r = 0; r < known.size(); ++r)
                if (distance(g, known[r], *root) < dedup) {
                    match = r;
                    break;
                }
            if (match == known.size()) {
                known.push_back(*root);
                claimed.push_back(0);
            }
            if (!claimed[match]) {
                claimed[match] = 1;
                found.push_back(known[match]);
            }
        }
    }
    return true;
}

std::vector<std::array<std::size_t, 2>> SurfaceCounter::hidden_loops(const ChartGrid& g, const double* f) const {
    // A grid extremum whose separable quadratic model reaches zero marks a
    // zero loop or fold too tight for marching squares and a Newton start.
    std::vector<std::array<std::size_t, 2>> out;
    const std::size_t n0 = g.nodes[0], n1 = g.nodes[1];
    for (std::size_t i = 0; i < n0; ++i) {
        if (!g.periodic[0] && (i == 0 || i + 1 == n0)) continue;
        const std::size_t ip = i + 1 == n0 ? 0 : i + 1, im = i == 0 ? n0 - 1 : i - 1;
        const double* row = f + i * n1;
        const double* up = f + ip * n1;
        const double* dn = f + im * n1;
        for (std::size_t j = 0; j < n1; ++j) {
            if (!g.periodic[1] && (j == 0 || j + 1 == n1)) continue;
            const double v = row[j], p0 = up[j], m0 = dn[j];
            const bool top = v >= p0 && v >= m0, bottom = v <= p0 && v <= m0;
            if (!top && !bottom) continue;
            const std::size_t jp = j + 1 == n1 ? 0 : j + 1, jm = j == 0 ? n1 - 1 : j - 1;
            const double p1 = row[jp], m1 = row[jm];
            // Ties along one axis admit ridges and valleys parallel to it.
            const bool some = v != p0 || v != m0 || v != p1 || v != m1;
            const bool is_max = top && v >= p1 && v >= m1 && some && std::min({p0, m0, p1, m1}) < 0.0;
            const bool is_min = bottom && v <= p1 && v <= m1 && some && std::max({p0, m0, p1, m1}) >= 0.0;
            if (!is_min && !is_max) continue;
            auto term = [](double a, double d) { return a == 0.0 ? 0.0 : d * d / (4.0 * a); };
            const double drop = term(0.5 * (p0 + m0 - 2.0 * v), 0.5 * (p0 - m0)) +
                                term(0.5 * (p1 + m1 - 2.0 * v), 0.5 * (p1 - m1));
            const double vertex = v - 2.0 * drop;
            if (is_max ? vertex >= 0.0 : vertex < 0.0) out.push_back({i, j});
        }
    }
    return out;
}

bool SurfaceCounter::patch_roots(const ChartGrid& g, std::array<std::size_t, 2> node, const std::array<Vec, 2>& u,
                                 const std::array<double, 2>& c, std::vector<ChartPoint>& known,
                                 std::vector<ChartPoint>& found) const {
    constexpr long reach = 2;   // cells on each side of the node
    constexpr long sub = 8;     // subdivisions per cell
    const std::size_t n = opts_.surface_grid;
    std::array<double, 2> lo, h;
    std::array<long, 2> m;
    for (std::size_t a = 0; a < 2; ++a) {
        const double base = g.box[a].width() / static_cast<double>(n);
        long first = static_cast<long>(node[a]) - reach, last = static_cast<long>(node[a]) + reach;
        if (!g.periodic[a]) {
            first = std::max(first, 0L);
            last = std::min(last, static_cast<long>(n));
        }
        lo[a] = g.box[a].lo + static_cast<double>(first) * base;
        h[a] = base / static_cast<double>(sub);
        m[a] = (last - first) * sub + 1;
    }
    std::vector<double> v1(static_cast<std::size_t>(m[0] * m[1])), v2(v1.size());
    Vec t(2);
    for (long i = 0; i < m[0]; ++i) {
        for (long j = 0; j < m[1]; ++j) {
            t[0] = lo[0] + static_cast<double>(i) * h[0];
            t[1] = lo[1] + static_cast<double>(j) * h[1];
            const ChartPoint p{g.chart, t};
            v1[static_cast<std::size_t>(i * m[1] + j)] = residual(phis_[0], p, u[0], c[0]);
            v2[static_cast<std::size_t>(i * m[1] + j)] = residual(phis_[1], p, u[1], c[1]);
        }
    }
    std::vector<char> claimed(known.size(), 0);
    for (long i = 0; i + 1 < m[0]; ++i) {
        for (long j = 0; j + 1 < m[1]; ++j) {
            const std::size_t corner[4] = {static_cast<std::size_t>(i * m[1] + j),
                                           static_cast<std::size_t>((i + 1) * m[1] + j),
                                           static_cast<std::size_t>((i + 1) * m[1] + j + 1),
                                           static_cast<std::size_t>(i * m[1] + j + 1)};
            double a[4], b[4];
            int ma = 0, mb = 0;
            for (int q = 0; q < 4; ++q) {
                a[q] = v1[corner[q]];
                b[q] = v2[corner[q]];
                ma |= neg(a[q]) << q;
                mb |= neg(b[q]) << q;
            }
            if (ma == 0 || ma == 15 || mb == 0 || mb == 15) continue;
            if (!cell_roots(g, a, b, lo[0] + static_cast<double>(i) * h[0], lo[1] + static_cast<double>(j) * h[1],
                            h[0], h[1], u, c, known, claimed, found))
                return false;
        }
    }
    return true;
}

SurfaceCounter::LevelCount SurfaceCounter::count_level(const ChartGrid& g, std::size_t cells, const double* f1,
                                                       const double* f2, const std::uint8_t* signs,
                                                       std::size_t stride, const std::array<Vec, 2>& u,
                                                       const std::array<double, 2>& c,
                                                       std::vector<ChartPoint>& known) const {
    const std::size_t n1 = g.periodic[1] ? cells * stride : cells * stride + 1;
    const std::size_t n0 = g.periodic[0] ? cells * stride : cells * stride + 1;
    auto idx = [&](std::size_t x, std::size_t n) { return x * stride == n ? 0 : x * stride; };
    const double h0 = g.box[0].width() / static_cast<double>(cells);
    const double h1 = g.box[1].width() / static_cast<double>(cells);

    // Bit 0 of signs[node]: f1 < 0; bit 1: f2 < 0. Per sampled row, the OR
    // and AND of those bits let whole strips of cells be skipped.
    std::vector<std::uint8_t> row_or(cells + 1), row_and(cells + 1);
    for (std::size_t x = 0; x <= cells; ++x) {
        const std::uint8_t* row = signs + idx(x, n0) * n1;
        std::uint8_t o = 0, a = 3;
        for (std::size_t y = 0; y < cells; ++y) {
            o |= row[idx(y, n1)];
            a &= row[idx(y, n1)];
        }
        if (!g.periodic[1]) {
            o |= row[n1 - 1];
            a &= row[n1 - 1];
        }
        row_or[x] = o;
        row_and[x] = a;
    }

    // Roots already located in this trial at other levels are reused: a
    // candidate whose (slightly enlarged) cell holds an unclaimed known root is
    // attributed to the nearest such root; Newton runs only for the rest.
    std::vector<char> claimed(known.size(), 0);
    LevelCount out{CountStatus::ok, {}};
    for (std::size_t ci = 0; ci < cells; ++ci) {
        const std::size_t i0 = idx(ci, n0), i1 = idx(ci + 1, n0);
        const std::uint8_t strip_or = row_or[ci] | row_or[ci + 1];
        const std::uint8_t strip_and = row_and[ci] & row_and[ci + 1];
        if ((strip_or & ~strip_and & 3) != 3) continue;
        const std::uint8_t* r0 = signs + i0 * n1;
        const std::uint8_t* r1 = signs + i1 * n1;
        for (std::size_t cj = 0; cj < cells; ++cj) {
            const std::size_t j0 = idx(cj, n1), j1 = idx(cj + 1, n1);
            const std::uint8_t o = r0[j0] | r1[j0] | r1[j1] | r0[j1];
            const std::uint8_t n = r0[j0] & r1[j0] & r1[j1] & r0[j1];
            if ((o & ~n & 3) != 3) continue;
            const std::size_t corner[4] = {i0 * n1 + j0, i1 * n1 + j0, i1 * n1 + j1, i0 * n1 + j1};
            double a[4], b[4];
            for (int q = 0; q < 4; ++q) {
                a[q] = f1[corner[q]];
                b[q] = f2[corner[q]];
            }
            const double x0 = g.box[0].lo + static_cast<double>(ci) * h0;
            const double y0 = g.box[1].lo + static_cast<double>(cj) * h1;
            if (!cell_roots(g, a, b, x0, y0, h0, h1, u, c, known, claimed, out.roots)) {
                out.status = CountStatus::degenerate;
                return out;
            }
        }
    }
    return out;
}

CountOutcome SurfaceCounter::count(const std::array<Vec, 2>& u, const std::array<double, 2>& c,
                                   CountScratch& scratch, std::vector<ChartPoint>* roots) const {
    for (std::size_t e = 0; e < 2; ++e)
        require(u[e].size() == phis_[e].dim, "SurfaceCounter::count: normal has the wrong dimension");
    const auto& k = simd::kernels();
    const std::size_t n = opts_.surface_grid;
    if (roots) roots->clear();
    CountOutcome out;
    std::vector<const double*> rows;
    for (const ChartGrid& g : grids_) {
        const std::size_t total = g.nodes[0] * g.nodes[1];
        std::array<std::vector<double>*, 2> buf{&scratch.s, &scratch.s2};
        bool empty = false;
        std::vector<std::array<std::size_t, 2>> loops;
        for (std::size_t e = 0; e < 2 && !empty; ++e) {
            rows.clear();
            for (const auto& r : g.rows[e]) rows.push_back(r.data());
            buf[e]->resize(total);
            double* s = buf[e]->data();
            k.affine_residuals(rows.data(), phis_[e].dim, total, u[e].data(), c[e], s);
            const auto hidden = hidden_loops(g, s);
            loops.insert(loops.end(), hidden.begin(), hidden.end());
            const auto [lo, hi] = std::minmax_element(s, s + total);
            if ((!(*lo < 0.0) || *hi < 0.0) && hidden.empty()) empty = true;
        }
        if (empty) continue;

        scratch.signs.resize(total);
        fill_signs(scratch.s.data(), scratch.s2.data(), total, scratch.signs.data());
        std::vector<ChartPoint> known;
        std::vector<LevelCount> history;
        for (std::size_t stride : {1u, 2u, 4u}) {
            history.push_back(count_level(g, n / stride, scratch.s.data(), scratch.s2.data(), scratch.signs.data(),
                                          stride, u, c, known));
            if (history.back().status != CountStatus::ok) return {history.back().status, 0};
        }
        std::swap(history[0], history[2]);

        // Roots on zero loops that slip between nodes at every level.
        std::vector<ChartPoint> extra;
        std::vector<std::array<std::size_t, 2>> done;
        auto near = [&](std::size_t a, std::size_t b, std::size_t axis) {
            const std::size_t d = a > b ? a - b : b - a;
            return d <= 1 || (g.periodic[axis] && g.nodes[axis] - d <= 1);
        };
        for (const auto& node : loops) {
            if (std::any_of(done.begin(), done.end(),
                            [&](const auto& o) { return near(o[0], node[0], 0) && near(o[1], node[1], 1); }))
                continue;
            done.push_back(node);
            if (!patch_roots(g, node, u, c, known, extra)) return {CountStatus::degenerate, 0};
        }
        const double dedup = opts_.dedup_rel * std::hypot(g.box[0].width(), g.box[1].width());
        auto merge = [&](LevelCount& level) {
            for (const ChartPoint& p : extra) {
                bool seen = false;
                for (const ChartPoint& q : level.roots)
                    if (distance(g, p, q) < dedup) {
                        seen = true;
                        break;
                    }
                if (!seen) level.roots.push_back(p);
            }
        };
        for (auto& level : history) merge(level);
        auto stable = [&] {
            const std::size_t h = history.size();
            return history[h - 1].roots.size() == history[h - 2].roots.size() &&
                   history[h - 2].roots.size() == history[h - 3].roots.size();
        };
        std::size_t cells = n;
        for (int r = 0; !stable(); ++r) {
            if (r == opts_.max_refinements) return {CountStatus::failed, 0};
            cells *= 2;
            const std::size_t m0 = g.periodic[0] ? cells : cells + 1;
            const std::size_t m1 = g.periodic[1] ? cells : cells + 1;
            std::vector<double> v1(m0 * m1), v2(m0 * m1);
            Vec t(2);
            for (std::size_t i = 0; i < m0; ++i) {
                t[0] = g.box[0].lo + g.box[0].width() * static_cast<double>(i) / static_cast<double>(cells);
                for (std::size_t j = 0; j < m1; ++j) {
                    t[1] = g.box[1].lo + g.box[1].width() * static_cast<double>(j) / static_cast<double>(cells);
                    const ChartPoint p{g.chart, t};
                    v1[i * m1 + j] = residual(phis_[0], p, u[0], c[0]);
                    v2[i * m1 + j] = residual(phis_[1], p, u[1], c[1]);
                }
            }
            std::vector<std::uint8_t> sg(m0 * m1);
            fill_signs(v1.data(), v2.data(), sg.size(), sg.data());
            history.push_back(count_level(g, cells, v1.data(), v2.data(), sg.data(), 1, u, c, known));
            if (history.back().status != CountStatus::ok) return {history.back().status, 0};
            merge(history.back());
        }
        out.count += history.back().roots.size();
        if (roots) roots->insert(roots->end(), history.back().roots.begin(), history.back().roots.end());
    }
    return out;
}

CountOutcome count_curve_hyperplane(const ParamManifold& curve, const Vec& u, double c, const CountOptions& opts) {
    require(u.size() == curve.ambient_dim(), "count_curve_hyperplane: normal has the wrong dimension");
    const CurveCounter counter(curve, immersion_block(curve, 0, curve.ambient_dim()), opts);
    CountScratch scratch;
    return counter.count(u, c, scratch);
}

CountOutcome count_surface_system(const ParamManifold& surface, const ScalarField& f1, const ScalarField& f2,
                                  const CountOptions& opts, std::vector<ChartPoint>* roots) {
    auto lift = [](const ScalarField& f) {
        require(static_cast<bool>(f.value) && static_cast<bool>(f.gradient),
                "count_surface_system: functions need values and gradients");
        FeatureMap m;
        m.dim = 1;
        m.value = [f](const ChartPoint& p) { return Vec::Constant(1, f.value(p)); };
        m.jacobian = [f](const ChartPoint& p) -> Mat { return f.gradient(p).transpose(); };
        return m;
    };
    const SurfaceCounter counter(surface, {lift(f1), lift(f2)}, opts);
    CountScratch scratch;
    const Vec one = Vec::Ones(1);
    return counter.count({one, one}, {0.0, 0.0}, scratch, roots);
}

}  // namespace crofton
