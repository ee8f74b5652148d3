#pragma once

#include "mlbias/backend/factory.hpp"
#include "mlbias/backend/fixture.hpp"
#include "mlbias/backend/http.hpp"
#include "mlbias/cda.hpp"
#include "mlbias/crows.hpp"
#include "mlbias/jsd.hpp"
#include "mlbias/report/compare.hpp"
#include "mlbias/report/config.hpp"
#include "mlbias/report/manifest.hpp"
#include "mlbias/report/run.hpp"
#include "mlbias/seat.hpp"
#include "mlbias/templates.hpp"
#include "mlbias/viz/proximity.hpp"
#include "mlbias/viz/svg.hpp"
#include "mlbias/viz/tsne.hpp"
#include "mlbias/viz/words.hpp"
