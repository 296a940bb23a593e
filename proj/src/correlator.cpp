#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstring>
#include <mutex>

#include "gradloc/errors.hpp"
#include "gradloc/matcher.hpp"

namespace gradloc {
namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwDeleter {
  void operator()(T* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

FftwBuffer<double> alloc_real(std::size_t n) {
  return FftwBuffer<double>(fftw_alloc_real(n));
}
FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  return FftwBuffer<fftw_complex>(fftw_alloc_complex(n));
}

int next_fast_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

// Template cell with its zero-mean weight.
struct Tap {
  int dx;
  int dy;
  double w;
};

// Observed template cells with weight T - mean(T); empty when nothing was
// observed. Because the weights sum to zero over the observed cells, the
// per-placement patch mean drops out of the correlation exactly.
std::vector<Tap> zero_mean_taps(const EdgeMap& t) {
  std::size_t n = 0;
  double sum = 0.0;
  for (int iy = 0; iy < t.height(); ++iy) {
    for (int ix = 0; ix < t.width(); ++ix) {
      if (!t.observed(ix, iy)) continue;
      ++n;
      sum += t.at(ix, iy);
    }
  }
  std::vector<Tap> taps;
  if (n == 0) return taps;
  const double mean = sum / static_cast<double>(n);
  taps.reserve(n);
  for (int iy = 0; iy < t.height(); ++iy) {
    for (int ix = 0; ix < t.width(); ++ix) {
      if (!t.observed(ix, iy)) continue;
      taps.push_back({ix, iy, static_cast<double>(t.at(ix, iy)) - mean});
    }
  }
  return taps;
}

}  // namespace

struct PriorMatcher::Spectrum {
  int nx = 0;
  int ny = 0;
  FftwBuffer<fftw_complex> prior;  // ny x (nx/2 + 1)
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  ~Spectrum() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

PriorMatcher::PriorMatcher(EdgeMap prior)
    : prior_(std::move(prior)),
      spectrum_once_(std::make_unique<std::once_flag>()) {
  prior_.geometry().validate();
}

PriorMatcher::~PriorMatcher() = default;
PriorMatcher::PriorMatcher(PriorMatcher&&) noexcept = default;
PriorMatcher& PriorMatcher::operator=(PriorMatcher&&) noexcept = default;

const PriorMatcher::Spectrum& PriorMatcher::spectrum() const {
  std::call_once(*spectrum_once_, [this] {
    auto s = std::make_unique<Spectrum>();
    s->nx = next_fast_size(prior_.width());
    s->ny = next_fast_size(prior_.height());
    const std::size_t nreal = static_cast<std::size_t>(s->nx) * s->ny;
    const std::size_t ncplx = static_cast<std::size_t>(s->nx / 2 + 1) * s->ny;
    auto in = alloc_real(nreal);
    s->prior = alloc_complex(ncplx);
    auto scratch = alloc_complex(ncplx);
    {
      std::lock_guard lock(planner_mutex());
      s->forward = fftw_plan_dft_r2c_2d(s->ny, s->nx, in.get(), scratch.get(),
                                        FFTW_ESTIMATE);
      s->inverse = fftw_plan_dft_c2r_2d(s->ny, s->nx, scratch.get(), in.get(),
                                        FFTW_ESTIMATE);
    }
    std::fill(in.get(), in.get() + nreal, 0.0);
    for (int iy = 0; iy < prior_.height(); ++iy) {
      for (int ix = 0; ix < prior_.width(); ++ix) {
        if (prior_.observed(ix, iy) && prior_.at(ix, iy)) {
          in[static_cast<std::size_t>(iy) * s->nx + ix] = 1.0;
        }
      }
    }
    fftw_execute_dft_r2c(s->forward, in.get(), s->prior.get());
    spectrum_ = std::move(s);
  });
  return *spectrum_;
}

SimilarityMap PriorMatcher::match(const EdgeMap& local,
                                  MatchMethod method) const {
  const auto& pg = prior_.geometry();
  const auto& tg = local.geometry();
  if (tg.width > pg.width || tg.height > pg.height) {
    throw DimensionError("template larger than prior map");
  }
  if (std::abs(tg.resolution - pg.resolution) > 1e-12 * pg.resolution) {
    throw DimensionError("template and prior resolutions differ");
  }

  const int px = pg.width - tg.width + 1;   // placements along x
  const int py = pg.height - tg.height + 1;
  const CellIndex anchor = template_anchor(tg);
  SimilarityMap sim(pg, {anchor.x, anchor.y, anchor.x + px, anchor.y + py});

  const auto taps = zero_mean_taps(local);
  // No observations, or a template without contrast: every placement scores 0.
  if (taps.empty()) return sim;
  bool contrast = false;
  for (const auto& t : taps) contrast = contrast || t.w != 0.0;
  if (!contrast) return sim;

  if (method == MatchMethod::automatic) {
    const double cost = static_cast<double>(px) * py * taps.size();
    method = cost > 4e6 ? MatchMethod::fft : MatchMethod::direct;
  }

  if (method == MatchMethod::direct) {
    // Row-wise accumulation; the summation order per placement is the tap order.
    std::vector<double> acc(static_cast<std::size_t>(px) * py, 0.0);
    std::vector<double> row(pg.width);
    for (const auto& tap : taps) {
      if (tap.w == 0.0) continue;
      for (int y = 0; y < py; ++y) {
        const int sy = y + tap.dy;
        double* out = &acc[static_cast<std::size_t>(y) * px];
        for (int x = 0; x < px; ++x) {
          const int sx = x + tap.dx;
          if (prior_.at(sx, sy) && prior_.observed(sx, sy)) out[x] += tap.w;
        }
      }
    }
    for (int y = 0; y < py; ++y) {
      for (int x = 0; x < px; ++x) {
        sim.at(x + anchor.x, y + anchor.y) = acc[static_cast<std::size_t>(y) * px + x];
      }
    }
    return sim;
  }

  const Spectrum& s = spectrum();
  const std::size_t nreal = static_cast<std::size_t>(s.nx) * s.ny;
  const std::size_t ncplx = static_cast<std::size_t>(s.nx / 2 + 1) * s.ny;
  auto kernel = alloc_real(nreal);
  auto kspec = alloc_complex(ncplx);
  std::fill(kernel.get(), kernel.get() + nreal, 0.0);
  for (const auto& tap : taps) {
    kernel[static_cast<std::size_t>(tap.dy) * s.nx + tap.dx] = tap.w;
  }
  fftw_execute_dft_r2c(s.forward, kernel.get(), kspec.get());
  // R = IFFT(F_prior * conj(F_kernel)); indices p + q never wrap for valid
  // placements because the transform is at least as large as the prior.
  for (std::size_t i = 0; i < ncplx; ++i) {
    const std::complex<double> a(s.prior[i][0], s.prior[i][1]);
    const std::complex<double> b(kspec[i][0], -kspec[i][1]);
    const auto c = a * b;
    kspec[i][0] = c.real();
    kspec[i][1] = c.imag();
  }
  fftw_execute_dft_c2r(s.inverse, kspec.get(), kernel.get());
  const double scale = 1.0 / static_cast<double>(nreal);
  for (int y = 0; y < py; ++y) {
    for (int x = 0; x < px; ++x) {
      sim.at(x + anchor.x, y + anchor.y) =
          kernel[static_cast<std::size_t>(y) * s.nx + x] * scale;
    }
  }
  return sim;
}

SimilarityMap match_template(const EdgeMap& local, const EdgeMap& prior,
                             MatchMethod method) {
  return PriorMatcher(prior).match(local, method);
}

}  // namespace gradloc
