#pragma once

#include "capa/classic.hpp"
#include "capa/cost.hpp"
#include "capa/detect.hpp"
#include "capa/error.hpp"
#include "capa/io.hpp"
#include "capa/parallel.hpp"
#include "capa/robust.hpp"
#include "capa/series.hpp"
#include "capa/simulate.hpp"
#include "capa/transit.hpp"
