// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_ERRORS_HPP
#define NIMLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nimlab
{

// Invalid arguments or violated preconditions.
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// Failures inside a numerical kernel (factorization breakdown, blow-up, ...).
class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace nimlab

#endif  // NIMLAB_ERRORS_HPP
