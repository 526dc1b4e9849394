#pragma once

// STWM binary field format (all integers u32, all reals float64, little-endian):
//
//   "STWM" | version | d | n_times | n_points | n_paths
//   values   n_paths * n_times * n_points, row-major (path, time, point)
//   times    n_times
//   points   n_points * d, row-major (point, coordinate)
//
// and a CSV export with header `path,time,<x-coords...>`.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stwm/sampler.hpp"

namespace stwm
{

inline constexpr std::array<char, 4> stwm_magic = {'S', 'T', 'W', 'M'};
inline constexpr std::uint32_t stwm_format_version = 1;

class FormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail
{

template <class T>
T to_little(T v)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        std::array<unsigned char, sizeof(T)> b;
        std::memcpy(b.data(), &v, sizeof(T));
        std::reverse(b.begin(), b.end());
        std::memcpy(&v, b.data(), sizeof(T));
    }
    return v;
}

template <class T>
void put(std::ostream& os, T v)
{
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    T v;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw FormatError("STWM: truncated file");
    return to_little(v);
}

inline std::uint32_t checked_u32(std::size_t n, const char* what)
{
    if (n > std::numeric_limits<std::uint32_t>::max())
        throw FormatError(std::string("STWM: ") + what + " exceeds 32 bits");
    return static_cast<std::uint32_t>(n);
}

}  // namespace detail

inline void write_stwm(std::ostream& os, const FieldSample& f)
{
    os.write(stwm_magic.data(), stwm_magic.size());
    detail::put<std::uint32_t>(os, stwm_format_version);
    detail::put<std::uint32_t>(os, detail::checked_u32(static_cast<std::size_t>(f.dim), "d"));
    detail::put<std::uint32_t>(os, detail::checked_u32(f.times.size(), "time count"));
    detail::put<std::uint32_t>(os, detail::checked_u32(f.points.size(), "point count"));
    detail::put<std::uint32_t>(os, detail::checked_u32(f.n_paths, "path count"));
    for (double v : f.values)
        detail::put<double>(os, v);
    for (double t : f.times.points())
        detail::put<double>(os, t);
    for (const auto& p : f.points)
        for (int i = 0; i < f.dim; ++i)
            detail::put<double>(os, p[i]);
    if (!os)
        throw std::runtime_error("STWM: write failed");
}

//! Reads a field written by write_stwm. Seed information is not part of the format.
inline FieldSample read_stwm(std::istream& is)
{
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != stwm_magic)
        throw FormatError("STWM: bad magic bytes");
    const auto version = detail::get<std::uint32_t>(is);
    if (version != stwm_format_version)
        throw FormatError("STWM: unsupported format version " + std::to_string(version));
    FieldSample f;
    f.dim = static_cast<int>(detail::get<std::uint32_t>(is));
    if (f.dim != 1 && f.dim != 2)
        throw FormatError("STWM: unsupported dimension");
    const std::size_t nt = detail::get<std::uint32_t>(is);
    const std::size_t np = detail::get<std::uint32_t>(is);
    f.n_paths = detail::get<std::uint32_t>(is);
    f.values.resize(f.n_paths * nt * np);
    for (auto& v : f.values)
        v = detail::get<double>(is);
    std::vector<double> times(nt);
    for (auto& t : times)
        t = detail::get<double>(is);
    f.times = TimeGrid(std::move(times));
    f.points.assign(np, Point{0.0, 0.0});
    for (auto& p : f.points)
        for (int i = 0; i < f.dim; ++i)
            p[i] = detail::get<double>(is);
    return f;
}

inline void write_stwm(const std::string& path, const FieldSample& f)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("STWM: cannot open " + path + " for writing");
    write_stwm(os, f);
}

inline FieldSample read_stwm(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("STWM: cannot open " + path);
    return read_stwm(is);
}

//! 17 significant digits: round-trip safe for doubles.
inline std::string format_real(double v)
{
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

//! Column label of a space point: "x" in 1D, "x:y" in 2D.
inline std::string point_label(const Point& p, int dim)
{
    return dim == 1 ? format_real(p[0]) : format_real(p[0]) + ":" + format_real(p[1]);
}

inline void write_field_csv(std::ostream& os, const FieldSample& f)
{
    os << "path,time";
    for (const auto& p : f.points)
        os << ',' << point_label(p, f.dim);
    os << '\n';
    for (std::size_t path = 0; path < f.n_paths; ++path)
        for (std::size_t i = 0; i < f.times.size(); ++i)
        {
            os << (f.first_path + path) << ',' << format_real(f.times[i]);
            for (std::size_t m = 0; m < f.points.size(); ++m)
                os << ',' << format_real(f.at(path, i, m));
            os << '\n';
        }
}

}  // namespace stwm
