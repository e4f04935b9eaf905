/*
 Copyright 2026 The thruster-biped Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef BIPED_BIPED_HPP
#define BIPED_BIPED_HPP

// Everything.

#include "biped/bezier.hpp"
#include "biped/config.hpp"
#include "biped/ds_control.hpp"
#include "biped/erg.hpp"
#include "biped/errors.hpp"
#include "biped/gait.hpp"
#include "biped/hybrid.hpp"
#include "biped/integrate.hpp"
#include "biped/io.hpp"
#include "biped/model.hpp"
#include "biped/plot.hpp"
#include "biped/qp.hpp"
#include "biped/validation.hpp"
#include "biped/walk.hpp"

#endif  // BIPED_BIPED_HPP
