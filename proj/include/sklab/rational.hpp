#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "sklab/errors.hpp"

namespace sklab {

// Parses "3/10", "0.3", "1e-2" etc. into a double. Config files carry
// human-entered probabilities in either form.
inline double parse_rational(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (text.empty()) throw ValidationError("empty numeric literal");

    auto parse_double = [&](std::string_view s) {
        s = trim(s);
        std::string buf(s);
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(buf, &pos);
        } catch (const std::exception&) {
            throw ValidationError("bad numeric literal: '" + buf + "'");
        }
        if (pos != buf.size())
            throw ValidationError("trailing junk in numeric literal: '" + buf + "'");
        return v;
    };

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        const double num = parse_double(text.substr(0, slash));
        const double den = parse_double(text.substr(slash + 1));
        if (den == 0.0) throw ValidationError("zero denominator in rational literal");
        return num / den;
    }
    return parse_double(text);
}

} // namespace sklab
