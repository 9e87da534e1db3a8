// Basic scalar types and the error hierarchy shared by every module.
#ifndef RMMLAB_CORE_HPP_
#define RMMLAB_CORE_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rmmlab {

using Value = std::int64_t;
using Loc = std::int64_t;
using ThreadId = std::int64_t;

/// The synthetic thread holding initialisation writes.
inline constexpr ThreadId kInitThread = 0;

/// Forked children of thread t are numbered 10*t + k for k = 1..9.
inline constexpr ThreadId kForkFanout = 10;

inline ThreadId parent_thread(ThreadId t) { return t >= kForkFanout ? t / kForkFanout : kInitThread; }

/// True iff `d` is a proper descendant of `a` in the fork tree.
inline bool is_descendant(ThreadId d, ThreadId a)
{
    if (a == kInitThread)
        return false;
    for (ThreadId p = parent_thread(d); p != kInitThread; p = parent_thread(p))
        if (p == a)
            return true;
    return false;
}

/// Wrapping addition; `overflow` is set when the mathematical result does
/// not fit.
inline Value wrapping_add(Value a, Value b, bool* overflow = nullptr)
{
    Value r;
    bool o = __builtin_add_overflow(a, b, &r);
    if (overflow)
        *overflow = o;
    return r;
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg), line_(line),
          column_(column)
    {
    }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class BoundExceeded : public Error {
public:
    using Error::Error;
};

class NotHighLevel : public Error {
public:
    NotHighLevel() : Error("graph has rmw edges") {}
};

class NotLowLevel : public Error {
public:
    NotLowLevel() : Error("graph has RMW events") {}
};

class InconsistentUpdateFn : public Error {
public:
    using Error::Error;
};

class UnknownEvent : public Error {
public:
    using Error::Error;
};

class OracleExhausted : public Error {
public:
    OracleExhausted() : Error("oracle ran out of values") {}
};

class UnresolvedSpec : public Error {
public:
    explicit UnresolvedSpec(const std::string& name) : Error("unknown atomic spec '" + name + "'") {}
};

class UnknownOperation : public Error {
public:
    using Error::Error;
};

class ReplayStuck : public Error {
public:
    using Error::Error;
};

} // namespace rmmlab

#endif
