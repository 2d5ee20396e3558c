#pragma once

#include "dfci/conformance.hpp"
#include "dfci/custody.hpp"
#include "dfci/dsl.hpp"
#include "dfci/error.hpp"
#include "dfci/event_graph.hpp"
#include "dfci/msc.hpp"
#include "dfci/protocols.hpp"
#include "dfci/render.hpp"
#include "dfci/sim.hpp"
#include "dfci/trace.hpp"
