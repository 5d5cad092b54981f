#pragma once

#include <charconv>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <system_error>

#include "metrics.hpp"

namespace doco {

/// Shortest round-trip decimal form, independent of locale and stream state.
inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc{})
        return "nan";
    return std::string(buf, res.ptr);
}

template <class Range, class Fmt>
std::string join(const Range& r, char sep, Fmt fmt)
{
    std::string out;
    bool first = true;
    for (const auto& v : r) {
        if (!first)
            out += sep;
        out += fmt(v);
        first = false;
    }
    return out;
}

inline void write_csv(std::ostream& os, const RunTrace& trace)
{
    os << "t,x,loss,cum_loss,m_t,n_arrivals,arrived_timestamps\n";
    for (const auto& r : trace.rows) {
        os << r.t << ',' << join(r.x, ';', format_double) << ',' << format_double(r.loss) << ','
           << format_double(r.cum_loss) << ',' << r.m << ',' << r.arrived.size() << ','
           << join(r.arrived, ';', [](Round k) { return std::to_string(k); }) << '\n';
    }
}

inline std::string to_csv(const RunTrace& trace)
{
    std::ostringstream os;
    write_csv(os, trace);
    return os.str();
}

} // namespace doco
