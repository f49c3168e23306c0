#pragma once

#include <stdexcept>
#include <string>

namespace invfem {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

// Text-format errors (Gmsh files, expressions, config). `where` is a line
// number for line-oriented formats and a byte offset for expressions.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long where)
        : Error(what), where_(where) {}
    long where() const { return where_; }

private:
    long where_;
};

class EvalError : public Error {
public:
    explicit EvalError(const std::string& what) : Error(what) {}
};

// Raised when det F <= 0 at a quadrature point. The solver catches this to
// cut the continuation step instead of aborting.
class ElementInversionError : public Error {
public:
    ElementInversionError(double jacobian, long cell = -1)
        : Error("element inversion: det F = " + std::to_string(jacobian) +
                (cell >= 0 ? " in cell " + std::to_string(cell) : "")),
          jacobian_(jacobian), cell_(cell) {}
    double jacobian() const { return jacobian_; }
    long cell() const { return cell_; }

private:
    double jacobian_;
    long cell_;
};

class FactorizationError : public Error {
public:
    explicit FactorizationError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace invfem
