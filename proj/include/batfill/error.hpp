#pragma once

#include <stdexcept>
#include <string>

namespace batfill {

// Every failure the library reports surfaces as this type; the CLI prints
// what() after the "batfill: error:" prefix.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool condition, const std::string& what) {
    if (!condition) {
        fail(what);
    }
}

}  // namespace batfill

// Like require, but the message is only built when the check fails. Used on
// hot paths where the message concatenates shape strings.
#define BATFILL_CHECK(condition, what)   \
    do {                                 \
        if (!(condition)) {              \
            ::batfill::fail(what);       \
        }                                \
    } while (false)
