"""MiniPong: a desk-scale two-paddle grid game.

The playfield is a width x height cell grid.  The opponent paddle sits in
column 0, the agent paddle in the last column, and the ball moves one
cell diagonally per step, bouncing off the top and bottom walls and off
paddles.  A ball crossing an uncovered paddle column scores a point:
+1 when the agent scores, -1 when the opponent does, 0 otherwise, so
points are zero-sum within a rally.  The opponent tracks the ball's
pre-move row with one step of lag and, on a seeded fraction of steps,
fails to move.

The environment is continuing: after a point the ball re-serves from the
center with a seeded direction and play flows on.  "Episodes" exist only
for score reporting; a game ends when either side reaches `win_points`,
the tallies reset, and nothing else changes, so the observed grid process
is unaffected by episode boundaries and lagged returns never truncate.

The factored view is the cell grid in row-major order, one factor per
cell over the occupancy alphabet {empty, ball, agent paddle, opponent
paddle}.
"""

from __future__ import annotations

from typing import NamedTuple

from ..errors import InputError
from .base import Mdp

UP, DOWN, NOOP = 0, 1, 2

EMPTY, BALL, AGENT, OPPONENT = 0, 1, 2, 3


class PongState(NamedTuple):
    ball_x: int
    ball_y: int
    vel_x: int
    vel_y: int
    agent_y: int
    opp_y: int
    agent_points: int
    opp_points: int


class MiniPongEnv(Mdp):
    n_actions = 3
    reward_values = (-1.0, 0.0, 1.0)
    episodic = False

    def __init__(self, width: int = 16, height: int = 16, paddle_len: int = 3,
                 opponent_fail: float = 0.10, win_points: int = 5):
        if width < 8 or height < 8:
            raise InputError(f"minipong needs width, height >= 8, got {width}x{height}")
        if not 1 <= paddle_len <= height:
            raise InputError("paddle length must fit the board")
        self.width = int(width)
        self.height = int(height)
        self.paddle_len = int(paddle_len)
        self.opponent_fail = float(opponent_fail)
        self.win_points = int(win_points)
        self.grid_shape = (self.height, self.width)
        self.factor_alphabets = (4,) * (self.width * self.height)
        # Visible component counts (scores never enter the observation).
        self._n_paddle = self.height - self.paddle_len + 1
        self.n_states = (self.width - 2) * self.height * 4 * self._n_paddle ** 2

    def _center(self) -> int:
        return (self.height - self.paddle_len) // 2

    def reset(self, rng):
        vx = 1 if rng.random() < 0.5 else -1
        vy = 1 if rng.random() < 0.5 else -1
        return PongState(self.width // 2, self.height // 2, vx, vy,
                         self._center(), self._center(), 0, 0)

    def _serve(self, state: PongState, rng) -> PongState:
        vx = 1 if rng.random() < 0.5 else -1
        vy = 1 if rng.random() < 0.5 else -1
        return state._replace(ball_x=self.width // 2, ball_y=self.height // 2,
                              vel_x=vx, vel_y=vy)

    def _covers(self, paddle_y: int, row: int) -> bool:
        return paddle_y <= row < paddle_y + self.paddle_len

    def step(self, state: PongState, action: int, rng):
        h, w, plen = self.height, self.width, self.paddle_len
        top = h - plen

        agent_y = state.agent_y
        if action == UP:
            agent_y = max(0, agent_y - 1)
        elif action == DOWN:
            agent_y = min(top, agent_y + 1)
        elif action != NOOP:
            raise InputError(f"minipong action must be 0..2, got {action}")

        # Opponent chases the pre-move ball row with one step of lag.
        opp_y = state.opp_y
        if rng.random() >= self.opponent_fail:
            opp_center = opp_y + plen // 2
            if state.ball_y < opp_center:
                opp_y = max(0, opp_y - 1)
            elif state.ball_y > opp_center:
                opp_y = min(top, opp_y + 1)

        vx, vy = state.vel_x, state.vel_y
        ny = state.ball_y + vy
        if ny < 0 or ny >= h:
            vy = -vy
            ny = state.ball_y + vy
        nx = state.ball_x + vx

        reward = 0.0
        if nx == 0:
            if self._covers(opp_y, ny):
                vx = 1
                nx = state.ball_x
            else:
                reward = 1.0
        elif nx == w - 1:
            if self._covers(agent_y, ny):
                vx = -1
                nx = state.ball_x
            else:
                reward = -1.0

        nxt = state._replace(agent_y=agent_y, opp_y=opp_y)
        if reward == 0.0:
            nxt = nxt._replace(ball_x=nx, ball_y=ny, vel_x=vx, vel_y=vy)
        else:
            nxt = self._serve(nxt, rng)
            if reward > 0:
                nxt = nxt._replace(agent_points=state.agent_points + 1)
            else:
                nxt = nxt._replace(opp_points=state.opp_points + 1)

        if max(nxt.agent_points, nxt.opp_points) >= self.win_points:
            nxt = nxt._replace(agent_points=0, opp_points=0)
        # Continuing chain: `terminal` is never reported; game boundaries
        # are a pure function of (state, reward), see `game_over`.
        return nxt, reward, False

    def game_over(self, state: PongState, reward: float) -> bool:
        """True when the step taken from `state` that earned `reward`
        finished a game (either tally reached `win_points`)."""
        if reward > 0:
            return state.agent_points + 1 >= self.win_points
        if reward < 0:
            return state.opp_points + 1 >= self.win_points
        return False

    def state_index(self, state: PongState) -> int:
        npad = self._n_paddle
        idx = state.ball_x - 1
        idx = idx * self.height + state.ball_y
        idx = idx * 2 + (state.vel_x + 1) // 2
        idx = idx * 2 + (state.vel_y + 1) // 2
        idx = idx * npad + state.agent_y
        idx = idx * npad + state.opp_y
        return idx

    def factor_view(self, state: PongState) -> tuple[int, ...]:
        return tuple(self.cell_bytes(state))

    def cell_bytes(self, state: PongState) -> bytes:
        """Row-major cell buffer; one byte per cell."""
        w = self.width
        cells = bytearray(w * self.height)
        for k in range(self.paddle_len):
            cells[(state.opp_y + k) * w] = OPPONENT
            cells[(state.agent_y + k) * w + (w - 1)] = AGENT
        cells[state.ball_y * w + state.ball_x] = BALL
        return bytes(cells)
