#include "panoworld/reproject.hpp"

#include "support.hpp"

#include <doctest.h>
#include <random>

using namespace pano;
using pano::test::chart_coord;
using pano::test::coordinate_chart;

TEST_SUITE("reproject")
{
    TEST_CASE("method and interpolation names round-trip")
    {
        for (auto m : {RemapMethod::oracle3d, RemapMethod::paper_separable}) {
            CHECK(parse_remap_method(to_string(m)) == m);
        }
        for (auto i : {Interpolation::nearest, Interpolation::bilinear}) {
            CHECK(parse_interpolation(to_string(i)) == i);
        }
        CHECK_FALSE(parse_remap_method("cubemap").has_value());
    }

    TEST_CASE("zero step field is the identity for both methods")
    {
        const ImageDims dims(64, 32);
        for (auto method : {RemapMethod::oracle3d, RemapMethod::paper_separable}) {
            const RemapField f = build_remap_field(dims, Displacement(0.0, 77.0), method);
            for (int y = 0; y < dims.height(); ++y) {
                for (int x = 0; x < dims.width(); ++x) {
                    CHECK(f.at(x, y).x == x);
                    CHECK(f.at(x, y).y == y);
                }
            }
        }
    }

    TEST_CASE("oracle field matches the per-pixel direction map")
    {
        const ImageDims dims(256, 128);
        for (const Displacement& disp : {Displacement(0.5, 0.0), Displacement(0.83, 211.0)}) {
            const RemapField f = build_remap_field(dims, disp, RemapMethod::oracle3d);
            for (int y = 0; y < dims.height(); ++y) {
                for (int x = 0; x < dims.width(); ++x) {
                    const PixelCoord expect =
                        dir_to_pixel(map_dir(pixel_to_dir({double(x), double(y)}, dims), disp), dims);
                    const double dx = std::abs(f.at(x, y).x - expect.x);
                    REQUIRE(std::min(dx, dims.width() - dx) < 1e-9);
                    REQUIRE(std::abs(f.at(x, y).y - expect.y) < 1e-9);
                }
            }
        }
    }

    TEST_CASE("oracle field anchors at 2048x1024")
    {
        const ImageDims dims(2048, 1024);
        const Displacement disp(0.5, 0.0);
        const RemapField f = build_remap_field(dims, disp, RemapMethod::oracle3d);

        // The two rows straddling the equator, at the column centred on
        // azimuth 90 + 0.5 px: source azimuth lies within a pixel of 60 deg.
        const double sixty = 2048.0 / 6.0 - 0.5;
        CHECK(std::abs(f.at(512, 511).x - sixty) < 1.0);
        CHECK(std::abs(f.at(512, 512).x - sixty) < 1.0);

        // Row 0 is half a pixel from the zenith; its sources converge on
        // polar pi/6 (row 1024/6 - 0.5) in the displacement direction.
        for (int x = 0; x < 2048; x += 128) {
            const PixelCoord s = f.at(x, 0);
            CHECK(std::abs(s.y - (1024.0 / 6.0 - 0.5)) < 1.0);
        }
    }

    TEST_CASE("fields never point outside the source")
    {
        std::mt19937 rng(99);
        std::uniform_int_distribution<int> halfw(1, 160);
        std::uniform_real_distribution<double> steps(0.0, 0.999);
        std::uniform_real_distribution<double> dirs(-720.0, 720.0);
        for (int i = 0; i < 40; ++i) {
            const ImageDims dims = ImageDims::from_width(2 * halfw(rng));
            const Displacement disp(steps(rng), dirs(rng));
            for (auto method : {RemapMethod::oracle3d, RemapMethod::paper_separable}) {
                const RemapField f = build_remap_field(dims, disp, method);
                for (const PixelCoord& c : f.coords()) {
                    REQUIRE(c.x >= 0.0);
                    REQUIRE(c.x < dims.width());
                    REQUIRE(c.y >= 0.0);
                    REQUIRE(c.y < dims.height());
                }
            }
        }
    }

    TEST_CASE("sample")
    {
        EquirectImage img(ImageDims(4, 2));
        img.set(0, 0, {10, 20, 30});
        img.set(1, 0, {30, 40, 50});
        img.set(3, 0, {110, 120, 130});
        img.set(0, 1, {200, 200, 200});

        for (auto interp : {Interpolation::nearest, Interpolation::bilinear}) {
            CHECK(sample(img, {1.0, 0.0}, interp) == Rgb{30, 40, 50});
        }
        CHECK(sample(img, {0.5, 0.0}, Interpolation::bilinear) == Rgb{20, 30, 40});
        // Seam: x = width - 0.25 blends column 3 (0.25) with column 0 (0.75).
        CHECK(sample(img, {3.75, 0.0}, Interpolation::bilinear) == Rgb{35, 45, 55});
        CHECK(sample(img, {3.75, 0.0}, Interpolation::nearest) == Rgb{10, 20, 30});
        // Pole rows clamp.
        CHECK(sample(img, {0.0, 1.9}, Interpolation::bilinear) == Rgb{200, 200, 200});
        CHECK(sample(img, {0.0, 0.4}, Interpolation::nearest) == Rgb{10, 20, 30});
    }

    TEST_CASE("zero step reproduces the input")
    {
        const EquirectImage img = test::noise_image(512, 1);
        CHECK(reproject_image(img, Displacement(0.0, 0.0), RemapMethod::oracle3d, Interpolation::nearest) == img);
        CHECK(max_channel_diff(reproject_image(img, Displacement(0.0, 0.0), RemapMethod::oracle3d,
                                               Interpolation::bilinear),
                               img) <= 1);
    }

    TEST_CASE("solid color stays solid")
    {
        const auto solid = EquirectImage::filled(ImageDims(128, 64), {12, 200, 77});
        for (auto method : {RemapMethod::oracle3d, RemapMethod::paper_separable}) {
            for (auto interp : {Interpolation::nearest, Interpolation::bilinear}) {
                CHECK(reproject_image(solid, Displacement(0.7, 123.0), method, interp) == solid);
            }
        }
    }

    TEST_CASE("forward point is fixed and every pixel pulls from the oracle source")
    {
        const ImageDims dims(512, 256);
        const int col = 300;
        const double direction = (col + 0.5) * 360.0 / dims.width();
        const Displacement disp(0.5, direction);

        EquirectImage dot(dims);
        dot.set(col, dims.height() / 2, {255, 255, 255});
        const EquirectImage moved = reproject_image(dot, disp, RemapMethod::oracle3d, Interpolation::nearest);
        CHECK(moved.at(col, dims.height() / 2) == Rgb{255, 255, 255});

        const EquirectImage chart = coordinate_chart(dims.width());
        const EquirectImage warped = reproject_image(chart, disp, RemapMethod::oracle3d, Interpolation::nearest);
        for (int y = 0; y < dims.height(); ++y) {
            for (int x = 0; x < dims.width(); ++x) {
                const PixelCoord s = dir_to_pixel(map_dir(pixel_to_dir({double(x), double(y)}, dims), disp), dims);
                const int sx = static_cast<int>(std::floor(s.x + 0.5)) % dims.width();
                const int sy = std::min(static_cast<int>(std::floor(s.y + 0.5)), dims.height() - 1);
                REQUIRE(chart_coord(warped.at(x, y)) == std::pair{sx, sy});
            }
        }
    }

    TEST_CASE("output is independent of the thread count")
    {
        const EquirectImage img = test::noise_image(256, 4);
        const Displacement disp(0.6, 33.0);
        for (auto method : {RemapMethod::oracle3d, RemapMethod::paper_separable}) {
            const auto one = reproject_image(img, disp, method, Interpolation::bilinear, {1});
            CHECK(reproject_image(img, disp, method, Interpolation::bilinear, {3}) == one);
            CHECK(reproject_image(img, disp, method, Interpolation::bilinear, {8}) == one);
        }
    }

    TEST_CASE("roll equivariance on the pixel grid")
    {
        const EquirectImage img = test::noise_image(256, 9);
        const int w = img.width();
        for (int k : {1, 17, 100}) {
            const Displacement disp(0.45, 10.0 * 360.0 / w);
            const Displacement turned(0.45, (10.0 + k) * 360.0 / w);
            const auto direct = reproject_image(img, disp, RemapMethod::oracle3d, Interpolation::nearest);
            const auto via_roll = test::roll_columns(
                reproject_image(test::roll_columns(img, k), turned, RemapMethod::oracle3d, Interpolation::nearest), -k);
            CHECK(via_roll == direct);
        }
    }

    TEST_CASE("remap cache reuses fields")
    {
        RemapCache cache({1});
        const ImageDims dims(64, 32);
        const auto a = cache.field(dims, Displacement(0.3, 10.0), RemapMethod::oracle3d);
        const auto b = cache.field(dims, Displacement(0.3, 370.0), RemapMethod::oracle3d);
        const auto c = cache.field(dims, Displacement(0.3, 10.0), RemapMethod::paper_separable);
        CHECK(a == b);
        CHECK(a != c);
        CHECK(cache.size() == 2);

        const EquirectImage img = test::noise_image(64, 2);
        CHECK(cache.reproject(img, Displacement(0.3, 10.0), RemapMethod::oracle3d, Interpolation::bilinear) ==
              reproject_image(img, Displacement(0.3, 10.0), RemapMethod::oracle3d, Interpolation::bilinear));
    }

    TEST_CASE("remap fields and the sampler guard their ranges")
    {
        const ImageDims dims(4, 2);
        std::vector<PixelCoord> coords(8, PixelCoord{0.0, 0.0});
        CHECK_NOTHROW(RemapField(dims, coords));
        coords[3] = {4.0, 0.0};
        CHECK_THROWS_AS(RemapField(dims, coords), std::out_of_range);
        coords[3] = {0.0, -0.1};
        CHECK_THROWS_AS(RemapField(dims, coords), std::out_of_range);
        CHECK_THROWS_AS(RemapField(dims, std::vector<PixelCoord>(3)), InvalidDims);

        EquirectImage img(dims);
        img.set(3, 0, {9, 9, 9});
        CHECK(sample(img, {-1.0, 0.0}, Interpolation::nearest) == Rgb{9, 9, 9});
        CHECK(sample(img, {7.0, -3.0}, Interpolation::bilinear) == Rgb{9, 9, 9});
    }

    TEST_CASE("apply_remap rejects mismatched dims")
    {
        const RemapField f = build_remap_field(ImageDims(8, 4), Displacement(0.1, 0.0), RemapMethod::oracle3d);
        CHECK_THROWS_AS(apply_remap(EquirectImage(ImageDims(16, 8)), f, Interpolation::nearest), InvalidDims);
    }

    TEST_CASE("compare_methods")
    {
        const ImageDims dims(256, 128);
        const MethodComparison zero = compare_methods(dims, Displacement(0.0, 0.0));
        CHECK(zero.max_error == 0.0);
        CHECK(zero.mean_error == 0.0);
        CHECK(zero.equator_max_error == 0.0);

        const MethodComparison half = compare_methods(dims, Displacement(0.5, 0.0));
        CHECK(half.equator_max_error < 1e-9);
        CHECK(std::isfinite(half.max_error));
        CHECK(half.max_error > half.mean_error);
        CHECK(half.mean_error > 0.0);

        CHECK(compare_methods(dims, Displacement(0.5, 0.0), {1}).max_error ==
              compare_methods(dims, Displacement(0.5, 0.0), {4}).max_error);
    }
}
