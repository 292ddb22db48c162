#ifndef PL_TEST_SUPPORT_HPP
#define PL_TEST_SUPPORT_HPP

#include "doctest.h"
#include "pl/error.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace pl::test
{

// Code of the pl::Error thrown by f, or "" when nothing (or something else) is thrown.
inline std::string error_code(const std::function<void()> &f)
{
    try
    {
        f();
    }
    catch (const pl::Error &e)
    {
        return e.code();
    }
    catch (...)
    {
        return "<foreign exception>";
    }
    return "";
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

} // namespace pl::test

#define CHECK_ERROR_CODE(expr, code) CHECK(pl::test::error_code([&] { (void)(expr); }) == std::string(code))

#endif
