#pragma once

#include "afcnet/analysis.hpp"
#include "afcnet/channel.hpp"
#include "afcnet/detection.hpp"
#include "afcnet/errors.hpp"
#include "afcnet/events.hpp"
#include "afcnet/formats.hpp"
#include "afcnet/histogram.hpp"
#include "afcnet/memory.hpp"
#include "afcnet/random.hpp"
#include "afcnet/runner.hpp"
#include "afcnet/scenario.hpp"
#include "afcnet/source.hpp"
#include "afcnet/timeline.hpp"
