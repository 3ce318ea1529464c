#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "mtcn/pgm.hpp"

using namespace mtcn;

TEST_CASE("parse_pgm decodes an 8-bit graymap") {
    const std::string data = std::string("P5\n2 2\n255\n") +
                             std::string("\x00\x40\x80\xFF", 4);
    GrayImage img = parse_pgm(reinterpret_cast<const std::uint8_t*>(data.data()), data.size(),
                              "test");
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK_FALSE(img.is_16bit());
    CHECK(img.at(0, 0) == 0);
    CHECK(img.at(0, 1) == 64);
    CHECK(img.at(1, 0) == 128);
    CHECK(img.at(1, 1) == 255);
}

TEST_CASE("parse_pgm decodes big-endian 16-bit samples and flags them") {
    const std::string data = std::string("P5\n2 1\n65535\n") +
                             std::string("\x3F\xFF\x00\x01", 4);
    GrayImage img = parse_pgm(reinterpret_cast<const std::uint8_t*>(data.data()), data.size(),
                              "test");
    CHECK(img.is_16bit());
    CHECK(img.at(0, 0) == 16383);
    CHECK(img.at(0, 1) == 1);
}

TEST_CASE("parse_pgm rejects bad magic, corrupt header, truncated payload") {
    const std::string notpgm = "hello world";
    CHECK_THROWS_WITH_AS(
        parse_pgm(reinterpret_cast<const std::uint8_t*>(notpgm.data()), notpgm.size(), "t"),
        doctest::Contains("magic"), ParseError);

    const std::string badhdr = "P5\nxx yy\n255\n";
    CHECK_THROWS_WITH_AS(
        parse_pgm(reinterpret_cast<const std::uint8_t*>(badhdr.data()), badhdr.size(), "t"),
        doctest::Contains("header"), ParseError);

    const std::string shortpay = std::string("P5\n2 2\n255\n") + "\x01\x02";
    CHECK_THROWS_WITH_AS(
        parse_pgm(reinterpret_cast<const std::uint8_t*>(shortpay.data()), shortpay.size(), "t"),
        doctest::Contains("truncated"), ParseError);
}

TEST_CASE("parse_pgm skips header comments") {
    const std::string data = std::string("P5\n# a comment\n1 1\n255\n") + "\x7F";
    GrayImage img = parse_pgm(reinterpret_cast<const std::uint8_t*>(data.data()), data.size(),
                              "test");
    CHECK(img.at(0, 0) == 127);
}

TEST_CASE("save/load round-trip, 8-bit and 16-bit") {
    for (std::uint16_t maxval : {std::uint16_t(255), std::uint16_t(16383)}) {
        GrayImage img;
        img.width = 3;
        img.height = 2;
        img.maxval = maxval;
        img.pixels = {0, 1, 2, std::uint16_t(maxval / 2), std::uint16_t(maxval - 1), maxval};
        const std::string path = "test_roundtrip.pgm";
        save_pgm(img, path);
        GrayImage back = load_pgm(path);
        CHECK(back.width == img.width);
        CHECK(back.height == img.height);
        CHECK(back.maxval == img.maxval);
        CHECK(back.pixels == img.pixels);
        std::remove(path.c_str());
    }
}

TEST_CASE("to_tensor normalizes to [0,1]") {
    GrayImage img;
    img.width = 2;
    img.height = 1;
    img.maxval = 255;
    img.pixels = {0, 255};
    Tensor t = to_tensor(img);
    CHECK(t.shape() == std::vector<std::size_t>{1, 2, 1});
    CHECK(t[0] == 0.0f);
    CHECK(t[1] == 1.0f);
}
