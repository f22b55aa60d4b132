// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

namespace ava::detail {

/// The value stored under `key`, or an empty object when absent.
inline const nlohmann::json& object_field(const nlohmann::json& j, const char* key) {
    static const nlohmann::json empty = nlohmann::json::object();
    const auto it = j.find(key);
    return it != j.end() ? *it : empty;
}

}  // namespace ava::detail
