#include "spicer/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "spicer/fft.hpp"

namespace spicer {

ComplexImage zero_filled_recon(const MultiCoilKspace& y, const CoilSensitivities* csm) {
  const auto coil_imgs = ifft2c(y.data);
  if (csm) return coil_combine(coil_imgs, *csm);
  ComplexImage out(y.height(), y.width());
  const size_t plane = coil_imgs.plane_size();
  for (size_t p = 0; p < plane; ++p) {
    double rss = 0.0;
    for (int k = 0; k < coil_imgs.n_coils; ++k)
      rss += std::norm(coil_imgs.data[k * plane + p]);
    out.data[p] = cxd(std::sqrt(rss), 0.0);
  }
  return out;
}

void TvConfig::validate() const {
  if (tau <= 0.0) throw ValidationError("TvConfig: tau must be > 0");
  if (outer_iters < 1) throw ValidationError("TvConfig: outer_iters must be >= 1");
  if (step <= 0.0) throw ValidationError("TvConfig: step must be > 0");
  if (prox_iters < 1) throw ValidationError("TvConfig: prox_iters must be >= 1");
}

namespace {

// Forward differences with zero at the far edge.
void grad_h(const ComplexImage& x, ComplexImage& dh) {
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c < x.width; ++c)
      dh.at(r, c) = c + 1 < x.width ? x.at(r, c + 1) - x.at(r, c) : cxd(0, 0);
}

void grad_v(const ComplexImage& x, ComplexImage& dv) {
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c < x.width; ++c)
      dv.at(r, c) = r + 1 < x.height ? x.at(r + 1, c) - x.at(r, c) : cxd(0, 0);
}

// Negative divergence: adjoint of (grad_h, grad_v).
void div_adjoint(const ComplexImage& ph, const ComplexImage& pv, ComplexImage& out) {
  const int h = ph.height, w = ph.width;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      cxd acc(0, 0);
      if (c + 1 < w) acc -= ph.at(r, c);
      if (c > 0) acc += ph.at(r, c - 1);
      if (r + 1 < h) acc -= pv.at(r, c);
      if (r > 0) acc += pv.at(r - 1, c);
      out.at(r, c) = acc;
    }
}

double tv_value(const ComplexImage& x) {
  double acc = 0.0;
  for (int r = 0; r < x.height; ++r)
    for (int c = 0; c < x.width; ++c) {
      if (c + 1 < x.width) acc += std::abs(x.at(r, c + 1) - x.at(r, c));
      if (r + 1 < x.height) acc += std::abs(x.at(r + 1, c) - x.at(r, c));
    }
  return acc;
}

// prox of alpha * ||D . ||_1 at z via projected dual ascent; ph/pv carry the
// warm-started dual variables across calls.
ComplexImage tv_prox(const ComplexImage& z, double alpha, int iters,
                     ComplexImage& ph, ComplexImage& pv) {
  const int h = z.height, w = z.width;
  ComplexImage x(h, w), dh(h, w), dv(h, w);
  const double sigma = 0.125;  // 1 / ||D||^2 in 2D
  for (int it = 0; it < iters; ++it) {
    div_adjoint(ph, pv, x);
    for (size_t p = 0; p < x.data.size(); ++p) x.data[p] = z.data[p] - x.data[p];
    grad_h(x, dh);
    grad_v(x, dv);
    for (size_t p = 0; p < x.data.size(); ++p) {
      cxd vh = ph.data[p] + sigma * dh.data[p];
      cxd vv = pv.data[p] + sigma * dv.data[p];
      const double mh = std::abs(vh);
      const double mv = std::abs(vv);
      ph.data[p] = mh > alpha ? vh * (alpha / mh) : vh;
      pv.data[p] = mv > alpha ? vv * (alpha / mv) : vv;
    }
  }
  div_adjoint(ph, pv, x);
  for (size_t p = 0; p < x.data.size(); ++p) x.data[p] = z.data[p] - x.data[p];
  return x;
}

}  // namespace

double tv_objective(const ComplexImage& x, const MultiCoilKspace& y,
                    const CoilSensitivities& csm, double tau) {
  ForwardModel model(csm, y.mask);
  const auto pred = forward(x, model);
  double data = 0.0;
  for (size_t p = 0; p < pred.data.data.size(); ++p)
    data += std::norm(pred.data.data[p] - y.data.data[p]);
  return 0.5 * data + tau * tv_value(x);
}

TvResult tv_reconstruct(const MultiCoilKspace& y, const CoilSensitivities& csm,
                        const TvConfig& cfg) {
  cfg.validate();
  TvResult result;
  // L <= 1 holds for RSS-normalized maps; larger steps void the descent
  // guarantee.
  result.step_warning = cfg.step > 1.0;

  ForwardModel model(csm, y.mask);
  ComplexImage x = adjoint(y, model);
  const int h = x.height, w = x.width;
  ComplexImage ph(h, w), pv(h, w);  // warm-started dual state

  for (int it = 0; it < cfg.outer_iters; ++it) {
    const auto pred = forward(x, model);
    MultiCoilKspace residual = pred;
    for (size_t p = 0; p < residual.data.data.size(); ++p)
      residual.data.data[p] -= y.data.data[p];
    const auto grad = adjoint(residual, model);
    ComplexImage z(h, w);
    for (size_t p = 0; p < z.data.size(); ++p)
      z.data[p] = x.data[p] - cfg.step * grad.data[p];
    x = tv_prox(z, cfg.step * cfg.tau, cfg.prox_iters, ph, pv);
    result.objective_history.push_back(tv_objective(x, y, csm, cfg.tau));
  }
  result.image = std::move(x);
  return result;
}

namespace {

struct GrappaGeometry {
  int r = 1;          // equispaced factor
  int offset = 0;     // residue of the equispaced lattice
  int nb = 4;         // phase-encode source lines
  int nr = 5;         // readout taps
  int acs_lo = 0;
  int acs_hi = 0;     // inclusive
};

GrappaGeometry analyze_mask(const MultiCoilKspace& y, std::pair<int, int> kernel_hw) {
  GrappaGeometry g;
  g.nb = kernel_hw.first;
  g.nr = kernel_hw.second;
  if (g.nb < 2 || g.nb % 2 != 0)
    throw ValidationError("grappa: phase-encode kernel size must be even and >= 2");
  if (g.nr < 1 || g.nr % 2 == 0)
    throw ValidationError("grappa: readout kernel size must be odd and >= 1");

  const auto& mask = y.mask;
  if (mask.acs_lines.empty()) throw ValidationError("grappa: mask has no ACS lines");
  g.acs_lo = mask.acs_lines.front();
  g.acs_hi = mask.acs_lines.back();

  // Equispaced factor = largest gap between consecutive selected lines.
  int r = 1;
  for (size_t i = 1; i < mask.selected_lines.size(); ++i)
    r = std::max(r, mask.selected_lines[i] - mask.selected_lines[i - 1]);
  g.r = r;
  if (r == 1) return g;

  // Lattice residue from the non-ACS lines.
  for (int row : mask.selected_lines)
    if (!mask.is_acs(row)) {
      g.offset = row % r;
      break;
    }

  const int acs_len = g.acs_hi - g.acs_lo + 1;
  const int needed = (g.nb - 1) * r + 1;
  if (acs_len < needed)
    throw ValidationError("grappa: kernel needs at least " + std::to_string(needed) +
                          " ACS lines for R = " + std::to_string(r) + ", mask has " +
                          std::to_string(acs_len));
  if (y.width() < g.nr)
    throw ValidationError("grappa: readout too narrow for the kernel");
  return g;
}

using CMat = Eigen::MatrixXcd;

// Calibration equations for one line offset: every ACS target row whose full
// source stencil stays inside the ACS block contributes one equation per
// readout column.
void build_calibration(const MultiCoilKspace& y, const GrappaGeometry& g, int delta,
                       CMat& a, CMat& b) {
  const int nc = y.n_coils();
  const int w = y.width();
  const int n_unknown = nc * g.nb * g.nr;
  const int col_lo = g.nr / 2;
  const int col_hi = w - 1 - g.nr / 2;

  std::vector<int> targets;
  for (int t = g.acs_lo; t <= g.acs_hi; ++t) {
    const int base = t - delta;
    const int src_lo = base - (g.nb / 2 - 1) * g.r - g.r;
    // source rows: base + (a - (nb/2 - 1)) * r for a in [0, nb)
    const int first = base - (g.nb / 2 - 1) * g.r;
    const int last = first + (g.nb - 1) * g.r;
    (void)src_lo;
    if (first >= g.acs_lo && last <= g.acs_hi) targets.push_back(t);
  }
  if (targets.empty())
    throw ValidationError("grappa: ACS too small to calibrate offset " +
                          std::to_string(delta));

  const int n_eq = int(targets.size()) * (col_hi - col_lo + 1);
  a = CMat(n_eq, n_unknown);
  b = CMat(n_eq, nc);
  int eq = 0;
  for (int t : targets) {
    const int first = t - delta - (g.nb / 2 - 1) * g.r;
    for (int c = col_lo; c <= col_hi; ++c) {
      int u = 0;
      for (int j = 0; j < nc; ++j)
        for (int ai = 0; ai < g.nb; ++ai)
          for (int bi = 0; bi < g.nr; ++bi)
            a(eq, u++) = y.data.at(j, first + ai * g.r, c + bi - g.nr / 2);
      for (int k = 0; k < nc; ++k) b(eq, k) = y.data.at(k, t, c);
      ++eq;
    }
  }
}

CMat solve_ridge(const CMat& a, const CMat& b, double ridge) {
  CMat normal = a.adjoint() * a;
  const double lambda = ridge * normal.trace().real() / double(normal.rows());
  for (int i = 0; i < normal.rows(); ++i) normal(i, i) += lambda;
  return normal.ldlt().solve(a.adjoint() * b);
}

}  // namespace

MultiCoilKspace grappa(const MultiCoilKspace& y, std::pair<int, int> kernel_hw,
                       double ridge) {
  const auto g = analyze_mask(y, kernel_hw);
  MultiCoilKspace out = y;
  if (g.r == 1) return out;  // full lattice: nothing to fill

  const int nc = y.n_coils();
  const int h = y.height();
  const int w = y.width();

  // One kernel set per offset pattern.
  std::vector<CMat> kernels(g.r);
  for (int delta = 1; delta < g.r; ++delta) {
    CMat a, b;
    build_calibration(y, g, delta, a, b);
    kernels[delta] = solve_ridge(a, b, ridge);
  }

  for (int t = 0; t < h; ++t) {
    if (y.mask.is_selected(t)) continue;  // acquired lines pass through
    const int delta = ((t - g.offset) % g.r + g.r) % g.r;
    if (delta == 0) continue;  // lattice row beyond the last acquired line
    const CMat& kern = kernels[delta];
    const int first = t - delta - (g.nb / 2 - 1) * g.r;
    for (int c = 0; c < w; ++c) {
      int u = 0;
      Eigen::RowVectorXcd src(nc * g.nb * g.nr);
      for (int j = 0; j < nc; ++j)
        for (int ai = 0; ai < g.nb; ++ai)
          for (int bi = 0; bi < g.nr; ++bi) {
            const int rr = first + ai * g.r;
            const int cc = c + bi - g.nr / 2;
            src(u++) = (rr >= 0 && rr < h && cc >= 0 && cc < w)
                           ? y.data.at(j, rr, cc)
                           : cxd(0, 0);
          }
      const Eigen::RowVectorXcd filled = src * kern;
      for (int k = 0; k < nc; ++k) out.data.at(k, t, c) = filled(k);
    }
  }

  // Output is fully filled: widen the mask to every line.
  out.mask.selected_lines.resize(h);
  for (int t = 0; t < h; ++t) out.mask.selected_lines[t] = t;
  return out;
}

double grappa_calibration_residual(const MultiCoilKspace& y,
                                   std::pair<int, int> kernel_hw, double ridge) {
  const auto g = analyze_mask(y, kernel_hw);
  if (g.r == 1) return 0.0;
  double num = 0.0, den = 0.0;
  for (int delta = 1; delta < g.r; ++delta) {
    CMat a, b;
    build_calibration(y, g, delta, a, b);
    const CMat wmat = solve_ridge(a, b, ridge);
    num += (a * wmat - b).squaredNorm();
    den += b.squaredNorm();
  }
  return std::sqrt(num / den);
}

}  // namespace spicer
