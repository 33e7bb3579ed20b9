/*
 * Copyright 2026 The hklab Authors. All rights reserved.
 * This file is licensed to you under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License. You may obtain a copy
 * of the License at http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software distributed under
 * the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR REPRESENTATIONS
 * OF ANY KIND, either express or implied. See the License for the specific language
 * governing permissions and limitations under the License.
 */
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace hklab {

using Vec3 = Eigen::Vector3d;

enum class ErrorCode {
    InvalidArgument = 1,
    DomainError = 2,
    NumericalError = 3,
    IoError = 4,
    CheckFailed = 5,
};

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message)
        , m_code(code)
    {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message)
{
    if (!condition) fail(ErrorCode::InvalidArgument, message);
}

} // namespace hklab
