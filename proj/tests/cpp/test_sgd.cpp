// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "swarmplan/sgd.hpp"
