#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scar/repr.hpp"
#include "scar/synth.hpp"
#include "test_util.hpp"

using namespace scar;
using namespace scar::test;

namespace {

// Independent boundary oracle: a set pixel is boundary iff it touches the
// image border or has an unset 4-neighbor.
BinaryMask brute_force_boundary(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            const bool border = x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1;
            if (border || !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) ||
                !m.at(x, y + 1))
                out.set(x, y);
        }
    return out;
}

}  // namespace

TEST_CASE("extract_contour matches the boundary definition") {
    SUBCASE("all-zero mask stays empty") {
        const BinaryMask empty(8, 8);
        CHECK(extract_contour(empty).count() == 0);
    }
    SUBCASE("full 8x8 mask yields the 28-pixel border ring") {
        const Contour c = extract_contour(full_mask(8, 8));
        CHECK(c.count() == 28);
        CHECK(c == brute_force_boundary(full_mask(8, 8)));
    }
    SUBCASE("centered 4x4 square yields a 12-pixel ring") {
        const BinaryMask square = rect_mask(8, 8, 2, 2, 4, 4);
        const Contour c = extract_contour(square);
        CHECK(c.count() == 12);
        CHECK(c == brute_force_boundary(square));
    }
    SUBCASE("contour is contained in its mask and exposes a 4-neighbor") {
        Rng rng(41);
        for (int i = 0; i < 50; ++i) {
            const BinaryMask m = random_mask(rng, rng.uniform_int(2, 24), rng.uniform_int(2, 24));
            CHECK(extract_contour(m) == brute_force_boundary(m));
            CHECK(subset_of(extract_contour(m), m));
        }
    }
}

TEST_CASE("dilate_binary") {
    SUBCASE("radius 0 is the identity") {
        Rng rng(7);
        const BinaryMask m = random_mask(rng, 17, 11);
        CHECK(dilate_binary(m, 0) == m);
    }
    SUBCASE("single pixel at (4,4), radius 2 gives the 13-pixel Euclidean disk") {
        const BinaryMask m = mask_of(9, 9, {{4, 4}});
        const BinaryMask d = dilate_binary(m, 2);
        CHECK(d.count() == 13);
        CHECK(d == oracle_dilate(m, 2));
    }
    SUBCASE("corner pixels at radius 1 become clipped 3-pixel crosses") {
        const BinaryMask m = mask_of(9, 9, {{0, 0}, {8, 8}});
        const BinaryMask d = dilate_binary(m, 1);
        CHECK(d.count() == 6);
        CHECK(d == oracle_dilate(m, 1));
        CHECK(d.at(0, 0));
        CHECK(d.at(1, 0));
        CHECK(d.at(0, 1));
        CHECK(!d.at(1, 1));
    }
    SUBCASE("negative radius is rejected") {
        CHECK_THROWS_AS(dilate_binary(BinaryMask(4, 4), -1.0), InvalidRadius);
    }
    SUBCASE("extensivity and monotonicity over random masks") {
        Rng rng(11);
        for (int i = 0; i < 60; ++i) {
            const BinaryMask m = random_mask(rng, rng.uniform_int(4, 32), rng.uniform_int(4, 32));
            const int r1 = rng.uniform_int(0, 6), r2 = rng.uniform_int(r1, 6);
            const BinaryMask d1 = dilate_binary(m, r1), d2 = dilate_binary(m, r2);
            CHECK(subset_of(m, d1));
            CHECK(subset_of(d1, d2));
        }
    }
}

TEST_CASE("bbox_diagonal uses inclusive extents") {
    CHECK(bbox_diagonal(mask_of(5, 5, {{2, 3}})) == doctest::Approx(std::sqrt(2.0)));
    CHECK(bbox_diagonal(rect_mask(8, 8, 1, 1, 3, 4)) == doctest::Approx(5.0));
    CHECK(bbox_diagonal(mask_of(16, 16, {{0, 0}, {5, 12}})) ==
          doctest::Approx(std::sqrt(6.0 * 6.0 + 13.0 * 13.0)));
    CHECK_THROWS_AS(bbox_diagonal(BinaryMask(4, 4)), EmptyMask);
}

TEST_CASE("adaptive_object_radius clamps and rounds half-up") {
    RadiusParams p;
    p.r_h = 3;
    p.r_min = 2;
    p.r_max = 12;
    p.beta = 0.02;
    CHECK(adaptive_object_radius(100, p) == 2);
    CHECK(adaptive_object_radius(400, p) == 8);
    CHECK(adaptive_object_radius(10000, p) == 12);
    SUBCASE("half-up rounding") {
        p.beta = 0.5;
        CHECK(adaptive_object_radius(11, p) == 6);  // 5.5 rounds up
        CHECK(adaptive_object_radius(10.8, p) == 5);
    }
    SUBCASE("always inside the clamp range") {
        Rng rng(3);
        for (int i = 0; i < 500; ++i) {
            RadiusParams q;
            q.r_min = rng.uniform_int(1, 6);
            q.r_max = q.r_min + rng.uniform_int(0, 10);
            q.beta = rng.uniform(1e-4, 0.5);
            const double diag = rng.uniform(0.1, 2000.0);
            const int r = adaptive_object_radius(diag, q);
            CHECK(r >= q.r_min);
            CHECK(r <= q.r_max);
        }
    }
}

TEST_CASE("estimate_contact") {
    RadiusParams p;  // defaults: r_h=3, clamp [2,12], beta 0.02

    SUBCASE("distant shapes give an empty region") {
        const BinaryMask hand = rect_mask(64, 64, 2, 2, 4, 4);
        const BinaryMask object = rect_mask(64, 64, 50, 50, 4, 4);
        CHECK(estimate_contact(hand, object, p).none());
    }
    SUBCASE("abutting squares match the brute-force oracle") {
        RadiusParams q = p;
        q.r_min = q.r_max = 2;  // force r_o = 2
        q.r_h = 2;
        const BinaryMask hand = rect_mask(16, 16, 2, 4, 4, 4);
        const BinaryMask object = rect_mask(16, 16, 6, 4, 4, 4);
        const ContactRegion c = estimate_contact(hand, object, q);
        CHECK(!c.none());
        CHECK(c == oracle_contact(hand, object, 2, 2));
    }
    SUBCASE("identical masks intersect as the dilated shared contour") {
        RadiusParams q = p;
        q.r_h = 1;
        q.r_min = q.r_max = 1;
        const BinaryMask m = rect_mask(12, 12, 3, 3, 5, 5);
        CHECK(estimate_contact(m, m, q) == dilate_binary(extract_contour(m), 1));
    }
    SUBCASE("empty inputs yield an empty region without error") {
        const BinaryMask empty(8, 8);
        const BinaryMask m = rect_mask(8, 8, 1, 1, 3, 3);
        CHECK(estimate_contact(empty, m, p).none());
        CHECK(estimate_contact(m, empty, p).none());
    }
    SUBCASE("dimension mismatch is rejected") {
        CHECK_THROWS_AS(estimate_contact(BinaryMask(8, 8), BinaryMask(8, 9), p), ShapeMismatch);
    }
    SUBCASE("containment in both dilated contours") {
        Rng rng(17);
        for (int i = 0; i < 40; ++i) {
            const int w = rng.uniform_int(8, 32), h = rng.uniform_int(8, 32);
            const BinaryMask hand = random_mask(rng, w, h);
            const BinaryMask object = random_mask(rng, w, h);
            const ContactRegion c = estimate_contact(hand, object, p);
            if (hand.none() || object.none()) {
                CHECK(c.none());
                continue;
            }
            const int r_o = adaptive_object_radius(bbox_diagonal(object), p);
            CHECK(subset_of(c, dilate_binary(extract_contour(hand), p.r_h)));
            CHECK(subset_of(c, dilate_binary(extract_contour(object), r_o)));
        }
    }
    SUBCASE("swapping hand and object is symmetric when radii agree") {
        Rng rng(23);
        for (int i = 0; i < 30; ++i) {
            RadiusParams q;
            q.r_h = rng.uniform_int(1, 5);
            q.r_min = q.r_max = q.r_h;  // clamp pins r_o = r_h
            const int w = rng.uniform_int(8, 24), h = rng.uniform_int(8, 24);
            const BinaryMask a = random_mask(rng, w, h);
            const BinaryMask b = random_mask(rng, w, h);
            CHECK(estimate_contact(a, b, q) == estimate_contact(b, a, q));
        }
    }
}

TEST_CASE("normalize_depth") {
    SUBCASE("min-max over a single frame") {
        DepthFrame f(3, 1);
        f.values = {0.f, 5.f, 10.f};
        const auto out = normalize_depth({f});
        CHECK(out[0].values[0] == doctest::Approx(0.0));
        CHECK(out[0].values[1] == doctest::Approx(0.5));
        CHECK(out[0].values[2] == doctest::Approx(1.0));
    }
    SUBCASE("range is clip-global, not per-frame") {
        DepthFrame a(2, 1), b(2, 1);
        a.values = {2.f, 4.f};
        b.values = {4.f, 6.f};
        const auto out = normalize_depth({a, b});
        CHECK(out[0].values[1] == doctest::Approx(0.5));
        CHECK(out[1].values[0] == doctest::Approx(0.5));
    }
    SUBCASE("constant depth maps to 0.5") {
        DepthFrame f(4, 4, 7.f);
        const auto out = normalize_depth({f});
        for (float v : out[0].values) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("empty list is rejected") {
        CHECK_THROWS_AS(normalize_depth({}), EmptyClip);
    }
}

TEST_CASE("compose_scar_frame") {
    const int n = 6;
    const DepthFrame depth(n, n, 0.5f);
    const BinaryMask none(n, n);
    OverlayColors colors;

    SUBCASE("alpha 0 reproduces grayscale depth everywhere") {
        const BinaryMask hand = mask_of(n, n, {{1, 1}});
        const ScarFrame f = compose_scar_frame(hand, none, none, depth, 0.f, colors);
        for (float v : f.rgb) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("alpha 1 paints the pure overlay color") {
        const BinaryMask contact = mask_of(n, n, {{2, 3}});
        const ScarFrame f = compose_scar_frame(none, none, contact, depth, 1.f, colors);
        CHECK(f.at(2, 3, 0) == doctest::Approx(1.0));
        CHECK(f.at(2, 3, 1) == doctest::Approx(0.0));
        CHECK(f.at(2, 3, 2) == doctest::Approx(0.0));
    }
    SUBCASE("blend formula at alpha 0.8 over depth 0.5") {
        const BinaryMask hand = mask_of(n, n, {{4, 4}});
        const ScarFrame f = compose_scar_frame(hand, none, none, depth, 0.8f, colors);
        CHECK(f.at(4, 4, 0) == doctest::Approx(0.1));
        CHECK(f.at(4, 4, 1) == doctest::Approx(0.9));
        CHECK(f.at(4, 4, 2) == doctest::Approx(0.1));
    }
    SUBCASE("contact wins over hand wins over object, blending against depth") {
        const BinaryMask everywhere = full_mask(n, n);
        const ScarFrame f = compose_scar_frame(everywhere, everywhere, everywhere, depth, 0.8f,
                                               colors);
        CHECK(f.at(0, 0, 0) == doctest::Approx(0.9));  // contact red over 0.5
        const ScarFrame g = compose_scar_frame(everywhere, everywhere, none, depth, 0.8f, colors);
        CHECK(g.at(0, 0, 1) == doctest::Approx(0.9));  // hand green over 0.5
    }
    SUBCASE("channels stay inside [0,1] for random alpha") {
        Rng rng(29);
        for (int i = 0; i < 20; ++i) {
            DepthFrame d(8, 8);
            for (float& v : d.values) v = static_cast<float>(rng.uniform01());
            const BinaryMask hand = random_mask(rng, 8, 8);
            const BinaryMask object = random_mask(rng, 8, 8);
            const BinaryMask contact = random_mask(rng, 8, 8);
            const float alpha = static_cast<float>(rng.uniform01());
            const ScarFrame f = compose_scar_frame(hand, object, contact, d, alpha);
            for (float v : f.rgb) {
                CHECK(v >= 0.f);
                CHECK(v <= 1.f);
            }
        }
    }
    SUBCASE("shape mismatch is rejected") {
        CHECK_THROWS_AS(
            compose_scar_frame(BinaryMask(4, 4), BinaryMask(4, 4), BinaryMask(4, 4),
                               DepthFrame(5, 5), 0.5f, colors),
            ShapeMismatch);
    }
}

TEST_CASE("curate_clip") {
    SceneSpec spec;
    spec.seed = 99;
    const Clip clip = generate_scene(spec);
    RadiusParams params;

    SUBCASE("all-empty masks give a pure depth video") {
        Clip bare = clip;
        for (auto& m : bare.hand_masks) m = BinaryMask(spec.width, spec.height);
        for (auto& m : bare.object_masks) m = BinaryMask(spec.width, spec.height);
        const ScarVideo video = curate_clip(bare, params, 0.8f);
        const auto depth = normalize_depth(bare.depth);
        for (int f = 0; f < bare.frames(); ++f)
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x)
                    CHECK(video.frames[f].at(x, y, 0) == doctest::Approx(depth[f].at(x, y)));
    }
    SUBCASE("frame 7 equals composing frame 7's inputs in isolation") {
        const ScarVideo video = curate_clip(clip, params, 0.8f);
        const auto depth = normalize_depth(clip.depth);
        const int f = 7;
        const ScarFrame expected = compose_scar_frame(
            extract_contour(clip.hand_masks[f]), extract_contour(clip.object_masks[f]),
            estimate_contact(clip.hand_masks[f], clip.object_masks[f], params), depth[f], 0.8f);
        for (std::size_t k = 0; k < expected.rgb.size(); ++k)
            CHECK(video.frames[f].rgb[k] == doctest::Approx(expected.rgb[k]));
    }
    SUBCASE("shuffling frames commutes with curation") {
        const ScarVideo direct = curate_clip(clip, params, 0.8f);
        std::vector<int> perm(clip.frames());
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(5);
        for (int i = clip.frames() - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.uniform_int(0, i)]);

        Clip shuffled = clip;
        for (int i = 0; i < clip.frames(); ++i) {
            shuffled.rgb[i] = clip.rgb[perm[i]];
            shuffled.hand_masks[i] = clip.hand_masks[perm[i]];
            shuffled.object_masks[i] = clip.object_masks[perm[i]];
            shuffled.depth[i] = clip.depth[perm[i]];
        }
        const ScarVideo after = curate_clip(shuffled, params, 0.8f);
        for (int i = 0; i < clip.frames(); ++i) CHECK(after.frames[i].rgb == direct.frames[perm[i]].rgb);
    }
    SUBCASE("per-frame shape mismatch names the frame") {
        Clip broken = clip;
        broken.hand_masks[3] = BinaryMask(32, 32);
        CHECK_THROWS_WITH_AS(curate_clip(broken, params, 0.8f),
                             doctest::Contains("frame 3"), ShapeMismatch);
    }
    SUBCASE("a one-frame clip composes like the single frame") {
        Clip single = clip;
        single.rgb.resize(1);
        single.hand_masks.resize(1);
        single.object_masks.resize(1);
        single.depth.resize(1);
        single.manifest.frame_count = 1;
        const ScarVideo video = curate_clip(single, params, 0.8f);
        CHECK(video.frames.size() == 1);
    }
}
