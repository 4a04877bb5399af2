#pragma once

#include "lem/error.hpp"
#include "lem/field.hpp"
#include "lem/random.hpp"
#include "lem/shamir.hpp"
#include "lem/net/message.hpp"
#include "lem/net/registry.hpp"
#include "lem/net/inbox.hpp"
#include "lem/net/transport.hpp"
#include "lem/abb/metrics.hpp"
#include "lem/abb/costs.hpp"
#include "lem/abb/transcript.hpp"
#include "lem/abb/party.hpp"
#include "lem/abb/local.hpp"
#include "lem/auction/bid.hpp"
#include "lem/auction/protocol.hpp"
#include "lem/auction/session.hpp"
#include "lem/oracle.hpp"
#include "lem/billing.hpp"
#include "lem/scenario.hpp"
#include "lem/config.hpp"
