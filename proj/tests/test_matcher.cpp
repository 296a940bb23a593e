#include <cmath>
#include <random>

#include "doctest.h"
#include "gradloc/errors.hpp"
#include "gradloc/matcher.hpp"

using namespace gradloc;

namespace {

EdgeMap random_edges(int w, int h, std::mt19937_64& rng, double p_edge, double p_missing = 0.0) {
  EdgeMap e(GridGeometry{{0.0, 0.0}, 1.0, w, h});
  std::bernoulli_distribution edge(p_edge), miss(p_missing);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!miss(rng)) e.set(x, y, edge(rng));
  return e;
}

// R at template offset (px, py), written straight from the correlation sum:
// sum over observed template cells of (T - Tbar) * (I - Ibar_patch), with
// both means over the observed cells only.
double direct_score(const EdgeMap& t, const EdgeMap& img, int px, int py) {
  double tsum = 0.0, isum = 0.0;
  int n = 0;
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      if (t.observed(x, y)) {
        tsum += t.at(x, y);
        isum += img.at(px + x, py + y);
        ++n;
      }
  if (n == 0) return 0.0;
  const double tbar = tsum / n, ibar = isum / n;
  double r = 0.0;
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      if (t.observed(x, y)) r += (t.at(x, y) - tbar) * (img.at(px + x, py + y) - ibar);
  return r;
}

double max_oracle_error(const EdgeMap& t, const EdgeMap& img, MatchMethod m) {
  const SimilarityMap sim = match_template(t, img, m);
  const CellIndex a = template_anchor(t.geometry());
  double worst = 0.0;
  for (int py = 0; py + t.height() <= img.height(); ++py)
    for (int px = 0; px + t.width() <= img.width(); ++px) {
      REQUIRE(sim.is_valid(px + a.x, py + a.y));
      worst = std::max(worst, std::fabs(sim.at(px + a.x, py + a.y) - direct_score(t, img, px, py)));
    }
  return worst;
}

SimilarityMap map_from(int w, int h, const std::vector<double>& values) {
  SimilarityMap s(GridGeometry{{0.0, 0.0}, 1.0, w, h}, CellRect{0, 0, w, h});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) s.at(x, y) = values[static_cast<std::size_t>(y) * w + x];
  return s;
}

}  // namespace

TEST_CASE("correlation agrees with the direct sum") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> tdim(1, 8), extra(0, 12);
  double worst_direct = 0.0, worst_fft = 0.0;
  for (int i = 0; i < 150; ++i) {
    const int tw = tdim(rng), th = tdim(rng);
    const int iw = std::min(20, tw + extra(rng)), ih = std::min(20, th + extra(rng));
    const EdgeMap t = random_edges(tw, th, rng, 0.3, i % 3 == 0 ? 0.3 : 0.0);
    const EdgeMap img = random_edges(iw, ih, rng, 0.25);
    worst_direct = std::max(worst_direct, max_oracle_error(t, img, MatchMethod::direct));
    worst_fft = std::max(worst_fft, max_oracle_error(t, img, MatchMethod::fft));
  }
  CHECK(worst_direct <= 1e-9);
  CHECK(worst_fft <= 1e-6);
}

TEST_CASE("valid region is exactly the fitting placements") {
  std::mt19937_64 rng(3);
  const EdgeMap t = random_edges(5, 4, rng, 0.4), img = random_edges(12, 9, rng, 0.3);
  const SimilarityMap sim = match_template(t, img);
  CHECK(sim.geometry() == img.geometry());
  const CellRect v = sim.valid_region();
  CHECK(v == CellRect{2, 2, 2 + 12 - 5 + 1, 2 + 9 - 4 + 1});
}

TEST_CASE("self match peaks at the patch") {
  EdgeMap img(GridGeometry{{0.0, 0.0}, 1.0, 20, 20});
  EdgeMap t(GridGeometry{{0.0, 0.0}, 1.0, 5, 5});
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) img.set(x, y, false);
  const int pattern[5][5] = {{1, 0, 0, 1, 1}, {0, 1, 0, 0, 1}, {1, 1, 0, 0, 0},
                             {0, 0, 1, 0, 1}, {1, 0, 0, 1, 0}};
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      t.set(x, y, pattern[y][x]);
      img.set(9 + x, 4 + y, pattern[y][x]);
    }
  for (auto m : {MatchMethod::direct, MatchMethod::fft}) {
    const auto am = match_template(t, img, m).argmax();
    REQUIRE(am);
    CHECK(*am == CellIndex{9 + 2, 4 + 2});
  }
}

TEST_CASE("translation shifts the peak") {
  std::mt19937_64 rng(77);
  const EdgeMap img = random_edges(40, 40, rng, 0.2);
  // Template cut from the prior at two offsets: the argmax follows the cut.
  for (auto [ox, oy] : {std::pair{5, 7}, std::pair{17, 3}, std::pair{24, 25}}) {
    EdgeMap t(GridGeometry{{0.0, 0.0}, 1.0, 9, 9});
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) t.set(x, y, img.at(ox + x, oy + y));
    const auto am = match_template(t, img).argmax();
    REQUIRE(am);
    CHECK(*am == CellIndex{ox + 4, oy + 4});
  }
}

TEST_CASE("constant offset of the prior does not change scores") {
  // Binary maps cannot hold I + c directly; the complement 1 - I is an offset
  // plus a sign flip, so its scores must be exactly the negation.
  std::mt19937_64 rng(5);
  const EdgeMap t = random_edges(6, 6, rng, 0.4, 0.2), img = random_edges(18, 15, rng, 0.3);
  EdgeMap flipped(img.geometry());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) flipped.set(x, y, !img.at(x, y));
  const SimilarityMap a = match_template(t, img, MatchMethod::direct);
  const SimilarityMap b = match_template(t, flipped, MatchMethod::direct);
  const CellRect v = a.valid_region();
  for (int y = v.y0; y < v.y1; ++y)
    for (int x = v.x0; x < v.x1; ++x) CHECK(a.at(x, y) == doctest::Approx(-b.at(x, y)).epsilon(1e-12));
}

TEST_CASE("templates without evidence give flat scores") {
  std::mt19937_64 rng(6);
  const EdgeMap img = random_edges(15, 15, rng, 0.3);
  SUBCASE("no edges") {
    EdgeMap t(GridGeometry{{0.0, 0.0}, 1.0, 4, 4});
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) t.set(x, y, false);
    const SimilarityMap n = normalize(match_template(t, img));
    const CellRect v = n.valid_region();
    for (int y = v.y0; y < v.y1; ++y)
      for (int x = v.x0; x < v.x1; ++x) CHECK(n.at(x, y) == 1.0);
  }
  SUBCASE("nothing observed") {
    const EdgeMap t(GridGeometry{{0.0, 0.0}, 1.0, 4, 4});
    const SimilarityMap sim = match_template(t, img);
    const CellRect v = sim.valid_region();
    for (int y = v.y0; y < v.y1; ++y)
      for (int x = v.x0; x < v.x1; ++x) CHECK(sim.at(x, y) == sim.at(v.x0, v.y0));
  }
}

TEST_CASE("oversized template is rejected") {
  std::mt19937_64 rng(6);
  CHECK_THROWS_AS(match_template(random_edges(6, 3, rng, 0.5), random_edges(5, 10, rng, 0.5)),
                  DimensionError);
}

TEST_CASE("prior spectrum is reused across matches") {
  std::mt19937_64 rng(8);
  const PriorMatcher pm(random_edges(30, 25, rng, 0.3));
  for (int i = 0; i < 4; ++i) {
    const EdgeMap t = random_edges(7, 7, rng, 0.3, 0.1);
    const SimilarityMap f = pm.match(t, MatchMethod::fft), d = pm.match(t, MatchMethod::direct);
    double worst = 0.0;
    for (std::size_t k = 0; k < f.scores().size(); ++k)
      worst = std::max(worst, std::fabs(f.scores()[k] - d.scores()[k]));
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("blur with zero sigma is the identity") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(64);
  for (auto& x : v) x = u(rng);
  const SimilarityMap s = map_from(8, 8, v);
  CHECK(blur(s, 0.0) == s);
  CHECK_THROWS_AS(blur(s, -1.0), InvalidInput);
}

TEST_CASE("blurred impulse is the normalised Gaussian") {
  std::vector<double> v(21 * 21, 0.0);
  v[10 * 21 + 10] = 1.0;
  const SimilarityMap b = blur(map_from(21, 21, v), 1.0);
  // radius ceil(3 sigma) = 3
  double norm = 0.0;
  for (int k = -3; k <= 3; ++k) norm += std::exp(-0.5 * k * k);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 21; ++x) {
      const int dx = x - 10, dy = y - 10;
      double expect = 0.0;
      if (std::abs(dx) <= 3 && std::abs(dy) <= 3)
        expect = std::exp(-0.5 * dx * dx) * std::exp(-0.5 * dy * dy) / (norm * norm);
      CHECK(b.at(x, y) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("blur keeps constants and total mass") {
  const SimilarityMap c = map_from(9, 7, std::vector<double>(63, 2.5));
  const SimilarityMap bc = blur(c, 2.0);
  for (double s : bc.scores()) CHECK(s == doctest::Approx(2.5).epsilon(1e-12));

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(13 * 11);
    for (auto& x : v) x = u(rng);
    const SimilarityMap s = map_from(13, 11, v);
    for (double sigma : {0.5, 1.0, 2.0, 3.5}) {
      CHECK(std::fabs(blur(s, sigma).valid_sum() - s.valid_sum()) <= 1e-9);
    }
  }
}

TEST_CASE("blur leaves invalid cells alone") {
  SimilarityMap s(GridGeometry{{0.0, 0.0}, 1.0, 10, 10}, CellRect{2, 2, 8, 8});
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) s.at(x, y) = (x + y) % 3;
  const SimilarityMap b = blur(s, 1.5);
  CHECK(b.at(0, 0) == s.at(0, 0));
  CHECK(b.at(9, 4) == s.at(9, 4));
}

TEST_CASE("normalize is an affine min-max with a floor") {
  const SimilarityMap n = normalize(map_from(3, 1, {-2.0, 0.0, 6.0}));
  CHECK(n.at(0, 0) == kSimilarityFloor);
  CHECK(n.at(1, 0) == doctest::Approx(0.25));
  CHECK(n.at(2, 0) == 1.0);

  const SimilarityMap flat = normalize(map_from(2, 2, {4.0, 4.0, 4.0, 4.0}));
  for (double s : flat.scores()) CHECK(s == 1.0);

  SimilarityMap part(GridGeometry{{0.0, 0.0}, 1.0, 4, 4}, CellRect{1, 1, 3, 3});
  part.at(1, 1) = 5.0;
  part.at(2, 2) = -1.0;
  const SimilarityMap np = normalize(part);
  CHECK(np.at(0, 0) == kSimilarityFloor);
  CHECK(np.at(1, 1) == 1.0);
  CHECK(np.value_at({100.0, 0.0}) == kSimilarityFloor);

  CHECK_THROWS_AS(normalize(SimilarityMap(GridGeometry{{0.0, 0.0}, 1.0, 2, 2}, CellRect{})),
                  InvalidInput);
}

TEST_CASE("normalize preserves order above the floor") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  std::vector<double> v(100);
  for (auto& x : v) x = g(rng);
  const SimilarityMap s = map_from(10, 10, v);
  const SimilarityMap n = normalize(s);
  double lo = 1.0;
  for (double x : n.scores()) lo = std::min(lo, x);
  CHECK(lo >= kSimilarityFloor);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (v[i] < v[j] && n.scores()[i] > kSimilarityFloor) CHECK(n.scores()[i] < n.scores()[j]);
}

TEST_CASE("localize_once on a blank local map is uniform") {
  std::mt19937_64 rng(13);
  const EdgeMap prior = random_edges(50, 50, rng, 0.1);
  HeightGrid local(GridGeometry{{0.0, 0.0}, 1.0, 11, 11});
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) local.set(x, y, 0.0);
  const SimilarityMap sim = localize_once(local, prior, 0.7);
  const CellRect v = sim.valid_region();
  for (int y = v.y0; y < v.y1; ++y)
    for (int x = v.x0; x < v.x1; ++x) CHECK(sim.at(x, y) == 1.0);
}

TEST_CASE("localize_once finds a rotated local map when the compass is right") {
  // Heights laid out on the prior; the local map is the body-frame view at
  // heading 90 degrees, i.e. the north patch rotated the other way.
  std::mt19937_64 rng(19);
  HeightGrid world(GridGeometry{{0.0, 0.0}, 1.0, 60, 60});
  std::bernoulli_distribution tall(0.08);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 60; ++x) world.set(x, y, tall(rng) ? 12.0 : 0.0);
  const EdgeMap prior = edges_from_heights(world);
  const int cx = 31, cy = 24, n = 21, h = n / 2;
  HeightGrid local(GridGeometry{{0.0, 0.0}, 1.0, n, n});
  for (int by = 0; by < n; ++by)
    for (int bx = 0; bx < n; ++bx) {
      // body offset (bx-h, by-h) rotated by +90 degrees is world offset (-(by-h), bx-h)
      local.set(bx, by, world.at(cx - (by - h), cy + (bx - h)));
    }
  const auto am = localize_once(local, prior, M_PI / 2).argmax();
  REQUIRE(am);
  CHECK(*am == CellIndex{cx, cy});
}

TEST_CASE("similarity maps export as grids") {
  const SimilarityMap n = normalize(map_from(3, 2, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}));
  const HeightGrid g = similarity_to_grid(n);
  CHECK(g.width() == 3);
  CHECK(g.at(2, 1) == 1.0);
  CHECK(g.observed_count() == 6);
}
