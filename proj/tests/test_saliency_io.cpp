#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "salience/image_io.hpp"
#include "salience/rng.hpp"
#include "salience/saliency_io.hpp"
#include "test_util.hpp"

using namespace salience;
namespace fs = std::filesystem;
using test_util::random_map;

namespace {

fs::path tmp_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "salience_io_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

} // namespace

TEST_CASE("png heatmap round trip hits every representable level") {
    SalienceMap m(16, 16, 0.0, true);
    for (int i = 0; i < 256; ++i) m.values[static_cast<size_t>(i)] = i / 255.0;
    const fs::path p = tmp_dir() / "levels.png";
    save_heatmap(p, m);
    SalienceMap back = load_heatmap(p);
    REQUIRE(back.height == 16);
    REQUIRE(back.width == 16);
    CHECK(back.normalized);
    for (size_t i = 0; i < m.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(m.values[i]).epsilon(1e-12));
}

TEST_CASE("png save quantizes by rounding") {
    SalienceMap m(1, 4, {0.0, 0.4999 / 255.0, 0.5001 / 255.0, 1.0}, true);
    const fs::path p = tmp_dir() / "round.png";
    save_heatmap(p, m);
    ImageU8 img = read_png(p);
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[1] == 0);
    CHECK(img.pixels[2] == 1);
    CHECK(img.pixels[3] == 255);
}

TEST_CASE("npy float maps round trip exactly at f8") {
    Rng rng(5);
    SalienceMap m = random_map(rng, 9, 13, 0.0, 1.0, true);
    const fs::path p = tmp_dir() / "map.npy";
    write_npy_map(p, m);
    SalienceMap back = load_heatmap(p);
    REQUIRE(back.same_shape(m));
    for (size_t i = 0; i < m.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(m.values[i]).epsilon(1e-12));
}

TEST_CASE("npy maps outside the unit interval are min-max normalized") {
    SalienceMap m(2, 2, {-4.0, 0.0, 2.0, 4.0}, false);
    const fs::path p = tmp_dir() / "wide.npy";
    write_npy_map(p, m);
    SalienceMap back = load_heatmap(p);
    CHECK(back.normalized);
    CHECK(back.values[0] == doctest::Approx(0.0));
    CHECK(back.values[1] == doctest::Approx(0.5));
    CHECK(back.values[2] == doctest::Approx(0.75));
    CHECK(back.values[3] == doctest::Approx(1.0));
}

TEST_CASE("npy maps already inside the unit interval are left untouched") {
    // 0.2..0.8 does not span [0,1]; normalizing would stretch it. The loader
    // must keep the stored values.
    SalienceMap m(1, 3, {0.2, 0.5, 0.8}, false);
    const fs::path p = tmp_dir() / "narrow.npy";
    write_npy_map(p, m);
    SalienceMap back = load_heatmap(p);
    CHECK(back.values[0] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(back.values[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(back.values[2] == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("heatmap loader rejects missing and malformed files") {
    CHECK_THROWS_AS(load_heatmap(tmp_dir() / "does_not_exist.png"), IoError);
    const fs::path junk = tmp_dir() / "junk.npy";
    std::ofstream(junk) << "not an npy file";
    CHECK_THROWS_AS(load_heatmap(junk), IoError);
}

TEST_CASE("invert_map flips values and keeps shape") {
    Rng rng(6);
    SalienceMap m = random_map(rng, 4, 5, 0.0, 1.0, true);
    SalienceMap inv = invert_map(m);
    REQUIRE(inv.same_shape(m));
    for (size_t i = 0; i < m.values.size(); ++i)
        CHECK(inv.values[i] == doctest::Approx(1.0 - m.values[i]).epsilon(1e-12));
    // Involution.
    SalienceMap twice = invert_map(inv);
    for (size_t i = 0; i < m.values.size(); ++i)
        CHECK(twice.values[i] == doctest::Approx(m.values[i]).epsilon(1e-12));
}

TEST_CASE("integer-factor resize is block averaging") {
    SalienceMap m(4, 4, 0.0, true);
    for (int i = 0; i < 16; ++i) m.values[static_cast<size_t>(i)] = i / 15.0;
    SalienceMap down = resize_to_grid(m, 2, 2);
    REQUIRE(down.height == 2);
    REQUIRE(down.width == 2);
    CHECK(down.normalized);
    // Each output cell is the mean of its 2x2 block.
    CHECK(down.at(0, 0) == doctest::Approx((m.at(0, 0) + m.at(0, 1) + m.at(1, 0) + m.at(1, 1)) / 4));
    CHECK(down.at(1, 1) == doctest::Approx((m.at(2, 2) + m.at(2, 3) + m.at(3, 2) + m.at(3, 3)) / 4));
}

TEST_CASE("resize preserves constant maps and the mean under block averaging") {
    SalienceMap flat(8, 8, 0.25, true);
    SalienceMap out = resize_to_grid(flat, 3, 5);
    for (double v : out.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    Rng rng(7);
    SalienceMap m = random_map(rng, 12, 12, 0.0, 1.0, true);
    SalienceMap down = resize_to_grid(m, 4, 4);
    double mean_in = 0.0, mean_out = 0.0;
    for (double v : m.values) mean_in += v;
    for (double v : down.values) mean_out += v;
    CHECK(mean_out / down.values.size() == doctest::Approx(mean_in / m.values.size()).epsilon(1e-9));
}

TEST_CASE("identity resize is a no-op") {
    Rng rng(8);
    SalienceMap m = random_map(rng, 6, 9, 0.0, 1.0, true);
    SalienceMap same = resize_to_grid(m, 6, 9);
    for (size_t i = 0; i < m.values.size(); ++i) CHECK(same.values[i] == m.values[i]);
}

TEST_CASE("edge map marks the border band") {
    SalienceMap e = make_edge_map(20, 20, 0.1); // band = floor(0.1*20) = 2
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            const int d = std::min({y, x, 19 - y, 19 - x});
            CHECK(e.at(y, x) == (d < 2 ? 1.0 : 0.0));
        }
    CHECK(e.normalized);
    // A band that floors to zero is a configuration error, not a silent no-op.
    CHECK_THROWS_AS(make_edge_map(8, 8, 0.05), ValidationError);
    CHECK_THROWS_AS(make_edge_map(0, 8, 0.1), ValidationError);
}

TEST_CASE("png image io round trips gray and rgb") {
    Rng rng(9);
    for (int ch : {1, 3}) {
        ImageU8 img;
        img.height = 11;
        img.width = 7;
        img.channels = ch;
        img.pixels.resize(static_cast<size_t>(11) * 7 * ch);
        for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(256));
        const fs::path p = tmp_dir() / ("img" + std::to_string(ch) + ".png");
        write_png(p, img);
        ImageU8 back = read_png(p);
        REQUIRE(back.height == img.height);
        REQUIRE(back.width == img.width);
        REQUIRE(back.channels == ch);
        CHECK(back.pixels == img.pixels);
    }
}

TEST_CASE("image tensor conversion divides by 255 and clamps on the way back") {
    ImageU8 img;
    img.height = 1;
    img.width = 3;
    img.channels = 1;
    img.pixels = {0, 128, 255};
    Tensor t = image_to_tensor(img);
    CHECK(t.data[0] == 0.0);
    CHECK(t.data[1] == doctest::Approx(128.0 / 255.0));
    CHECK(t.data[2] == 1.0);
    t.data[0] = -0.5;
    t.data[2] = 1.5;
    ImageU8 back = tensor_to_image(t);
    CHECK(back.pixels[0] == 0);
    CHECK(back.pixels[2] == 255);
}
