#pragma once

#include <stdexcept>
#include <string>

namespace csichart {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error
{
public:
    using Error::Error;
};

class ShapeError : public Error
{
public:
    using Error::Error;
};

class DegenerateInput : public Error
{
public:
    using Error::Error;
};

class InvalidInput : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

// Dataset written by a different feature pipeline than the one in use.
class StaleDataset : public Error
{
public:
    using Error::Error;
};

class Unsupported : public Error
{
public:
    using Error::Error;
};

} // namespace csichart
