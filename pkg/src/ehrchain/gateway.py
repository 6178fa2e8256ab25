"""REST gateway mapping HTTP principals onto ledger identities.

The gateway is the custodial client: it stores every enrolled wallet,
signs proposals on behalf of logged-in users, and hands out HMAC-signed
bearer tokens. Reads are served by endorsement-time simulation without
ordering; mutations go through the full submit path and return the
commit receipt. Every error body is ``{code, message}``.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import os
from typing import Optional

from fastapi import Body, Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .chaincode.ehr import hash_password
from .errors import (
    ACCESS_DENIED,
    ALREADY_EXISTS,
    AUTH_FAILED,
    NOT_FOUND,
    VALIDATION,
    ChaincodeError,
    EndorsementRejected,
    QueueFullError,
)
from .explorer import ExplorerService
from .identity import Identity, Role
from .ledger import MVCC_CONFLICT, VALID
from .netconfig import ADMIN_AUTH_FILE, GATEWAY_FILE, NetworkHandle
from .txflow import ClientIdentity

EHR_CHAINCODE = "ehr"
RECEIPT_TIMEOUT_S = 30
DEFAULT_TOKEN_TTL_S = 1800

_CODE_STATUS = {
    ACCESS_DENIED: 403,
    NOT_FOUND: 404,
    AUTH_FAILED: 401,
    VALIDATION: 400,
    ALREADY_EXISTS: 409,
    MVCC_CONFLICT: 409,
}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


# -- bearer tokens -----------------------------------------------------------


class TokenError(Exception):
    pass


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _unb64url(text: str) -> bytes:
    return base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))


def mint_token(
    secret: bytes, subject_id: str, role: str, org: str, issued_at: int, ttl_seconds: int
) -> str:
    header = {"alg": "HS256", "typ": "JWT"}
    claims = {
        "sub": subject_id,
        "role": role,
        "org": org,
        "iat": issued_at,
        "exp": issued_at + ttl_seconds,
    }
    head = _b64url(json.dumps(header, separators=(",", ":")).encode("utf-8"))
    body = _b64url(json.dumps(claims, separators=(",", ":")).encode("utf-8"))
    signature = hmac.new(secret, f"{head}.{body}".encode("ascii"), hashlib.sha256).digest()
    return f"{head}.{body}.{_b64url(signature)}"


def decode_token(secret: bytes, token: str, now: int) -> dict:
    parts = token.split(".")
    if len(parts) != 3:
        raise TokenError("malformed token")
    head, body, signature = parts
    expected = hmac.new(secret, f"{head}.{body}".encode("ascii"), hashlib.sha256).digest()
    try:
        provided = _unb64url(signature)
    except (ValueError, TypeError):
        raise TokenError("malformed signature") from None
    if not hmac.compare_digest(expected, provided):
        raise TokenError("signature mismatch")
    try:
        claims = json.loads(_unb64url(body).decode("utf-8"))
    except (ValueError, UnicodeDecodeError):
        raise TokenError("malformed claims") from None
    for field in ("sub", "role", "org", "iat", "exp"):
        if field not in claims:
            raise TokenError(f"missing claim {field!r}")
    if now >= claims["exp"]:
        raise TokenError("token expired")
    return claims


# -- request bodies ----------------------------------------------------------


class LoginBody(BaseModel):
    id: str
    password: str


class CreatePatientBody(BaseModel):
    patient_id: str
    password: str
    personal: dict = {}


class GrantBody(BaseModel):
    doctor_id: str


class PasswordBody(BaseModel):
    old_password: str
    new_password: str


class RegisterDoctorBody(BaseModel):
    doctor_id: str
    display_name: str
    department: str = ""
    password: str


# -- app factory -------------------------------------------------------------


def create_app(
    handle: NetworkHandle,
    secret: Optional[bytes] = None,
    token_ttl_seconds: Optional[int] = None,
    clock=None,
) -> FastAPI:
    """Build the HTTP app over an opened network.

    ``secret`` and ``token_ttl_seconds`` default to the values written
    at bootstrap; ``clock`` defaults to the network's clock so tests can
    drive token expiry.
    """
    gateway_path = os.path.join(handle.data_dir, GATEWAY_FILE)
    with open(gateway_path, "r", encoding="utf-8") as fh:
        gateway_state = json.load(fh)
    if secret is None:
        secret = bytes.fromhex(gateway_state["secret"])
    if token_ttl_seconds is None:
        token_ttl_seconds = int(gateway_state.get("token_ttl_seconds", DEFAULT_TOKEN_TTL_S))
    if clock is None:
        clock = handle.network.clock
    with open(os.path.join(handle.data_dir, ADMIN_AUTH_FILE), "r", encoding="utf-8") as fh:
        admin_auth = json.load(fh)

    network = handle.network
    explorer = ExplorerService(network.chain)
    app = FastAPI(title="ehrchain gateway", docs_url=None, redoc_url=None, openapi_url=None)

    # -- error plumbing -------------------------------------------------

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": VALIDATION, "message": "malformed request body"}
        )

    def rejection_to_api_error(exc: EndorsementRejected) -> ApiError:
        if exc.kind == "identity":
            return ApiError(401, AUTH_FAILED, exc.message)
        return ApiError(_CODE_STATUS.get(exc.code, 400), exc.code, exc.message)

    def chaincode_to_api_error(exc: ChaincodeError) -> ApiError:
        return ApiError(_CODE_STATUS.get(exc.code, 400), exc.code, exc.message)

    # -- ledger access helpers -------------------------------------------

    def run_query(wallet: ClientIdentity, function: str, args: list[str], transient=None):
        proposal = network.new_proposal(wallet, EHR_CHAINCODE, function, args, transient)
        try:
            payload = network.query(proposal)
        except EndorsementRejected as exc:
            raise rejection_to_api_error(exc) from None
        return json.loads(payload)

    def run_invoke(wallet: ClientIdentity, function: str, args: list[str], transient=None):
        try:
            payload, future = network.invoke(wallet, EHR_CHAINCODE, function, args, transient)
        except EndorsementRejected as exc:
            raise rejection_to_api_error(exc) from None
        except QueueFullError as exc:
            raise ApiError(503, "overloaded", str(exc)) from None
        receipt = future.result(timeout=RECEIPT_TIMEOUT_S)
        if receipt.validity == MVCC_CONFLICT:
            raise ApiError(
                409, MVCC_CONFLICT, "a concurrent transaction touched the same record first"
            )
        if receipt.validity != VALID:
            raise ApiError(500, receipt.validity, "transaction rejected at commit")
        return json.loads(payload), {
            "tx_id": receipt.tx_id,
            "block_num": receipt.block_num,
            "validity": receipt.validity,
        }

    def new_salt() -> str:
        return handle.rng.randbytes(16).hex()

    # -- authentication ---------------------------------------------------

    def current_claims(authorization: Optional[str] = Header(None)) -> dict:
        if not authorization or not authorization.startswith("Bearer "):
            raise ApiError(401, AUTH_FAILED, "missing bearer token")
        try:
            return decode_token(secret, authorization[len("Bearer ") :], clock())
        except TokenError as exc:
            raise ApiError(401, AUTH_FAILED, str(exc)) from None

    def require_role(claims: dict, role: Role) -> None:
        if claims["role"] != role.value:
            raise ApiError(403, ACCESS_DENIED, f"requires the {role.value} role")

    def require_self(claims: dict, patient_id: str) -> None:
        require_role(claims, Role.PATIENT)
        if claims["sub"] != patient_id:
            raise ApiError(403, ACCESS_DENIED, "limited to the record owner")

    def wallet_for(claims: dict) -> ClientIdentity:
        wallet = handle.wallet(claims["sub"], Role(claims["role"]))
        if wallet is None:
            raise ApiError(401, AUTH_FAILED, "identity no longer enrolled")
        return wallet

    def token_response(subject_id: str, role: Role, org: str) -> dict:
        now = clock()
        token = mint_token(secret, subject_id, role.value, org, now, token_ttl_seconds)
        return {
            "token": token,
            "subject_id": subject_id,
            "role": role.value,
            "expires_in": token_ttl_seconds,
        }

    # -- auth routes -------------------------------------------------------

    @app.post("/auth/login")
    def login(body: LoginBody):
        invalid = ApiError(401, AUTH_FAILED, "invalid credentials")
        if body.id == admin_auth["id"]:
            expected = admin_auth["password_hash"]
            candidate = hash_password(body.password, bytes.fromhex(admin_auth["salt"]))
            if not hmac.compare_digest(candidate, expected):
                raise invalid
            wallet = handle.admin_wallet()
            return token_response(body.id, Role.ADMIN, wallet.certificate.org)
        # Ledger-backed principals: the gateway signs the credential
        # check itself since the caller has no session yet.
        try:
            proposal = network.new_proposal(
                handle.admin_wallet(),
                EHR_CHAINCODE,
                "verifyCredentials",
                [body.id],
                {"password": body.password},
            )
            verified = json.loads(network.query(proposal))
        except EndorsementRejected:
            raise invalid from None
        if verified is not True:
            raise invalid
        for role in (Role.PATIENT, Role.DOCTOR):
            wallet = handle.wallet(body.id, role)
            if wallet is not None:
                return token_response(body.id, role, wallet.certificate.org)
        raise invalid

    # -- admin routes --------------------------------------------------------

    @app.post("/admin/patients", status_code=201)
    def create_patient(body: CreatePatientBody, claims: dict = Depends(current_claims)):
        require_role(claims, Role.ADMIN)
        wallet = wallet_for(claims)
        if not body.patient_id:
            raise ApiError(400, VALIDATION, "patient_id must be non-empty")
        handle.enroll_client(body.patient_id, Role.PATIENT)
        result, receipt = run_invoke(
            wallet,
            "createPatient",
            [body.patient_id, json.dumps(body.personal), new_salt()],
            {"password": body.password},
        )
        return {"result": result, "receipt": receipt}

    @app.delete("/admin/patients/{patient_id}")
    def delete_patient(patient_id: str, claims: dict = Depends(current_claims)):
        require_role(claims, Role.ADMIN)
        wallet = wallet_for(claims)
        result, receipt = run_invoke(wallet, "deletePatient", [patient_id])
        handle.revoke_client(patient_id, Role.PATIENT)
        return {"result": result, "receipt": receipt}

    @app.get("/admin/patients")
    def list_patients(claims: dict = Depends(current_claims)):
        require_role(claims, Role.ADMIN)
        return {"patients": run_query(wallet_for(claims), "queryAllPatients", [])}

    @app.post("/admin/doctors", status_code=201)
    def register_doctor(body: RegisterDoctorBody, claims: dict = Depends(current_claims)):
        require_role(claims, Role.ADMIN)
        wallet = wallet_for(claims)
        if not body.doctor_id:
            raise ApiError(400, VALIDATION, "doctor_id must be non-empty")
        handle.enroll_client(body.doctor_id, Role.DOCTOR)
        result, receipt = run_invoke(
            wallet,
            "registerDoctor",
            [body.doctor_id, body.display_name, body.department, new_salt()],
            {"password": body.password},
        )
        return {"result": result, "receipt": receipt}

    # -- patient routes --------------------------------------------------------

    @app.get("/patients/{patient_id}")
    def read_own_record(patient_id: str, claims: dict = Depends(current_claims)):
        require_self(claims, patient_id)
        return run_query(wallet_for(claims), "readPatient", [patient_id])

    @app.patch("/patients/{patient_id}/personal")
    def update_personal(
        patient_id: str, changes: dict = Body(...), claims: dict = Depends(current_claims)
    ):
        require_self(claims, patient_id)
        result, receipt = run_invoke(
            wallet_for(claims), "updatePersonalDetails", [patient_id, json.dumps(changes)]
        )
        return {"result": result, "receipt": receipt}

    @app.patch("/patients/{patient_id}/password")
    def update_password(
        patient_id: str, body: PasswordBody, claims: dict = Depends(current_claims)
    ):
        require_self(claims, patient_id)
        result, receipt = run_invoke(
            wallet_for(claims),
            "updatePassword",
            [patient_id, new_salt()],
            {"old_password": body.old_password, "new_password": body.new_password},
        )
        return {"result": result, "receipt": receipt}

    @app.post("/patients/{patient_id}/grants")
    def grant_access(
        patient_id: str, body: GrantBody, claims: dict = Depends(current_claims)
    ):
        require_self(claims, patient_id)
        result, receipt = run_invoke(
            wallet_for(claims), "grantAccess", [patient_id, body.doctor_id]
        )
        return {"result": result, "receipt": receipt}

    @app.delete("/patients/{patient_id}/grants/{doctor_id}")
    def revoke_access(
        patient_id: str, doctor_id: str, claims: dict = Depends(current_claims)
    ):
        require_self(claims, patient_id)
        result, receipt = run_invoke(
            wallet_for(claims), "revokeAccess", [patient_id, doctor_id]
        )
        return {"result": result, "receipt": receipt}

    # -- doctor routes -----------------------------------------------------------

    @app.get("/doctor/patients")
    def granted_patients(claims: dict = Depends(current_claims)):
        require_role(claims, Role.DOCTOR)
        return {"patients": run_query(wallet_for(claims), "listGrantedPatients", [])}

    @app.get("/doctor/patients/{patient_id}")
    def read_patient_as_doctor(patient_id: str, claims: dict = Depends(current_claims)):
        require_role(claims, Role.DOCTOR)
        return run_query(wallet_for(claims), "readPatient", [patient_id])

    @app.patch("/doctor/patients/{patient_id}/medical")
    def update_medical(
        patient_id: str, delta: dict = Body(...), claims: dict = Depends(current_claims)
    ):
        require_role(claims, Role.DOCTOR)
        result, receipt = run_invoke(
            wallet_for(claims), "updateMedicalDetails", [patient_id, json.dumps(delta)]
        )
        return {"result": result, "receipt": receipt}

    # -- explorer routes -----------------------------------------------------------

    @app.get("/explorer/info")
    def chain_info(claims: dict = Depends(current_claims)):
        return explorer.get_chain_info()

    @app.get("/explorer/blocks/{number}")
    def explorer_block(number: int, claims: dict = Depends(current_claims)):
        require_role(claims, Role.ADMIN)
        block = explorer.get_block(number)
        if block is None:
            raise ApiError(404, NOT_FOUND, f"no block {number}")
        return block

    @app.get("/explorer/tx/{tx_id}")
    def explorer_tx(tx_id: str, claims: dict = Depends(current_claims)):
        require_role(claims, Role.ADMIN)
        found = explorer.get_transaction(tx_id)
        if found is None:
            raise ApiError(404, NOT_FOUND, f"no transaction {tx_id}")
        return found

    @app.get("/explorer/patients/{patient_id}/history")
    def record_history(patient_id: str, claims: dict = Depends(current_claims)):
        viewer = Identity(
            subject_id=claims["sub"], org=claims["org"], role=Role(claims["role"])
        )
        try:
            return {"events": explorer.get_record_history(patient_id, viewer)}
        except ChaincodeError as exc:
            raise chaincode_to_api_error(exc) from None

    return app
