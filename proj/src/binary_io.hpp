#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "csichart/errors.hpp"

namespace csichart::detail {

static_assert(std::endian::native == std::endian::little, "container formats assume a little-endian host");

class BinaryWriter
{
public:
    explicit BinaryWriter(const std::filesystem::path &path) : path_(path), out_(path, std::ios::binary | std::ios::trunc)
    {
        if (!out_)
            throw IoError("cannot open for writing: " + path.string());
    }

    void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }

    void f64s(const double *data, std::size_t n) { raw(data, n * sizeof(double)); }

    void string(std::string_view s)
    {
        u64(s.size());
        raw(s.data(), s.size());
    }

    void finish()
    {
        out_.flush();
        if (!out_)
            throw IoError("write failed: " + path_.string());
    }

private:
    void raw(const void *p, std::size_t n) { out_.write(static_cast<const char *>(p), static_cast<std::streamsize>(n)); }

    std::filesystem::path path_;
    std::ofstream out_;
};

class BinaryReader
{
public:
    explicit BinaryReader(const std::filesystem::path &path) : path_(path), in_(path, std::ios::binary)
    {
        if (!in_)
            throw IoError("cannot open for reading: " + path.string());
    }

    void expect_magic(std::string_view tag)
    {
        std::string got(tag.size(), '\0');
        raw(got.data(), got.size());
        if (got != tag)
            throw IoError("bad magic in " + path_.string() + " (expected " + std::string(tag.data()) + ")");
    }

    void expect_end()
    {
        if (in_.peek() != std::char_traits<char>::eof())
            throw IoError("unexpected trailing bytes in " + path_.string());
    }

    std::uint64_t u64()
    {
        std::uint64_t v;
        raw(&v, sizeof v);
        return v;
    }
    std::int64_t i64()
    {
        std::int64_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64()
    {
        double v;
        raw(&v, sizeof v);
        return v;
    }

    void f64s(double *data, std::size_t n) { raw(data, n * sizeof(double)); }

    std::string string()
    {
        const auto n = u64();
        if (n > (1u << 30))
            throw IoError("implausible string length in " + path_.string());
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

private:
    void raw(void *p, std::size_t n)
    {
        in_.read(static_cast<char *>(p), static_cast<std::streamsize>(n));
        if (!in_)
            throw IoError("truncated file: " + path_.string());
    }

    std::filesystem::path path_;
    std::ifstream in_;
};

} // namespace csichart::detail
