#pragma once

#include "fiberpool/amount.hpp"
#include "fiberpool/checks.hpp"
#include "fiberpool/child_chain.hpp"
#include "fiberpool/codec.hpp"
#include "fiberpool/crypto.hpp"
#include "fiberpool/engine.hpp"
#include "fiberpool/main_chain.hpp"
#include "fiberpool/payment_schemes.hpp"
#include "fiberpool/protocol.hpp"
#include "fiberpool/report.hpp"
#include "fiberpool/scenario.hpp"
#include "fiberpool/storage_chain.hpp"
#include "fiberpool/verification.hpp"
